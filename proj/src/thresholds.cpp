#include "boltzmix/thresholds.hpp"

#include <cmath>

namespace boltzmix {

namespace {

// the bracketed max_i factor of C_B, without the 4 pi / (k - 1 - gamma) front
double bracket_max(const Mixture& mix, const KernelModel& kernel, int* argmax,
                   double* inner, double* mass_sum) {
  const double gamma = kernel.gamma();
  double best = 0.0;
  for (int i = 0; i < mix.n_species(); ++i) {
    const double mi = mix.mass(i);
    double jsum = 0.0;
    for (int j = 0; j < mix.n_species(); ++j) {
      const double mj = mix.mass(j);
      const double num = (mi + mj) * (mi + mj);
      const double den = std::pow(mi, 2.0 - 0.5 * gamma) * std::pow(mj, 0.5 * (5.0 + gamma));
      jsum += kernel.cphi(i, j) * kernel.b_inf(i, j) * num / den;
    }
    double lsum = 0.0;
    for (int l = 0; l < mix.n_species(); ++l)
      lsum += std::sqrt(mix.mass(l)) / (kernel.cphi(i, l) * kernel.l_b(i, l));
    const double val = jsum * lsum;
    if (val > best) {
      best = val;
      if (argmax) *argmax = i + 1;
      if (inner) *inner = jsum;
      if (mass_sum) *mass_sum = lsum;
    }
  }
  return best;
}

}  // namespace

double c_b_polynomial(const Mixture& mix, const KernelModel& kernel, double k) {
  const double gamma = kernel.gamma();
  if (!(k > 1.0 + gamma))
    throw ValidationError("c_b_polynomial: requires k > 1 + gamma");
  return kFourPi / (k - 1.0 - gamma) * bracket_max(mix, kernel, nullptr, nullptr, nullptr);
}

double c_b_exponential() { return 0.0; }

double c_b_weight(const Mixture& mix, const KernelModel& kernel, const Weight& w) {
  if (w.kind == Weight::Kind::Exponential) return c_b_exponential();
  return c_b_polynomial(mix, kernel, w.k);
}

int find_k0(const Mixture& mix, const KernelModel& kernel) {
  const double gamma = kernel.gamma();
  int k = static_cast<int>(std::floor(1.0 + gamma)) + 1;
  while (!(k > 1.0 + gamma)) ++k;
  // C_B decreases like 1/(k - 1 - gamma), so this terminates
  while (!(c_b_polynomial(mix, kernel, k) < 1.0)) ++k;
  return std::max(k, 6);
}

ThresholdReport threshold_report(const Mixture& mix, const KernelModel& kernel,
                                 int k_min, int k_max) {
  ThresholdReport rep;
  const double gamma = kernel.gamma();
  bracket_max(mix, kernel, &rep.argmax_species, &rep.inner_sum, &rep.mass_sum);
  rep.k0 = find_k0(mix, kernel);
  int candidate = rep.k0;
  while (candidate > 2 && candidate - 1 > 1.0 + gamma &&
         c_b_polynomial(mix, kernel, candidate - 1) < 1.0)
    --candidate;
  rep.floor_bound = (candidate < rep.k0);
  rep.recommended_k = rep.k0 + 1;
  for (int k = k_min; k <= k_max; ++k) {
    if (!(k > 1.0 + gamma)) continue;
    rep.curve.emplace_back(k, c_b_polynomial(mix, kernel, k));
  }
  return rep;
}

}  // namespace boltzmix
