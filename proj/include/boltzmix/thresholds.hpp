// Explicit stability threshold: the B-operator contraction constant C_B(w)
// for polynomial weights and the minimal admissible exponent k0.

#pragma once

#include <vector>

#include "boltzmix/mixture.hpp"

namespace boltzmix {

// C_B for the polynomial weight <sqrt(m_i) v>^k:
//   4 pi / (k - 1 - gamma) * max_i [ (sum_j Cphi_ij binf_ij (m_i+m_j)^2 /
//   (m_i^{2-g/2} m_j^{(5+g)/2})) * (sum_l sqrt(m_l) / (Cphi_il l_b_il)) ].
// Requires k > 1 + gamma. Exponential weights have C_B = 0.
double c_b_polynomial(const Mixture& mix, const KernelModel& kernel, double k);

// Constant-zero contraction for exponential weights.
double c_b_exponential();

double c_b_weight(const Mixture& mix, const KernelModel& kernel, const Weight& w);

struct ThresholdReport {
  int k0 = 0;
  bool floor_bound = false;  // the k0 >= 6 floor decided the result
  int argmax_species = 0;    // species attaining the max (1-based)
  double inner_sum = 0.0;    // j-sum factor at the argmax species
  double mass_sum = 0.0;     // l-sum factor at the argmax species
  std::vector<std::pair<double, double>> curve;  // (k, C_B(k)) samples
  // admissible weights need k strictly above k0; the first such integer
  int recommended_k = 0;
};

// Smallest integer k with C_B(k) < 1 (strict), floored at 6.
int find_k0(const Mixture& mix, const KernelModel& kernel);

ThresholdReport threshold_report(const Mixture& mix, const KernelModel& kernel,
                                 int k_min = 3, int k_max = 20);

}  // namespace boltzmix
