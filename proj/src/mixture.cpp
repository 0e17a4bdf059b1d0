#include "boltzmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>

#include "boltzmix/sphere_rule.hpp"

namespace boltzmix {

Mixture::Mixture(std::vector<double> masses, std::vector<double> densities)
    : masses_(std::move(masses)), densities_(std::move(densities)) {
  if (masses_.empty()) throw ValidationError("mixture: need at least one species");
  if (masses_.size() != densities_.size())
    throw ValidationError("mixture: masses/densities size mismatch");
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    if (!(masses_[i] > 0.0) || !std::isfinite(masses_[i]))
      throw ValidationError("mixture: mass of species " + std::to_string(i + 1) +
                            " must be positive");
    if (!(densities_[i] > 0.0) || !std::isfinite(densities_[i]))
      throw ValidationError("mixture: density of species " + std::to_string(i + 1) +
                            " must be positive");
  }
}

double Mixture::rho_inf() const {
  double rho = 0.0;
  for (int i = 0; i < n_species(); ++i) rho += masses_[i] * densities_[i];
  return rho;
}

double Mixture::min_mass() const {
  return *std::min_element(masses_.begin(), masses_.end());
}

// ---------------------------------------------------------------------------
// AngularPart

AngularPart AngularPart::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ValidationError("angular: constant value must be positive and finite");
  AngularPart a;
  a.kind_ = Kind::Constant;
  a.c_ = value;
  return a;
}

AngularPart AngularPart::sincos(double c) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw ValidationError("angular: sincos coefficient must be positive and finite");
  AngularPart a;
  a.kind_ = Kind::SinCos;
  a.c_ = c;
  return a;
}

AngularPart AngularPart::tabulated(std::vector<double> samples) {
  if (samples.size() < 2) throw ValidationError("angular: table needs >= 2 samples");
  for (double s : samples) {
    if (!std::isfinite(s)) throw ValidationError("angular: non-finite table sample");
    if (s < 0.0) throw ValidationError("angular: negative table sample");
  }
  AngularPart a;
  a.kind_ = Kind::Tabulated;
  a.table_ = std::move(samples);
  return a;
}

double AngularPart::eval(double u) const {
  switch (kind_) {
    case Kind::Constant:
      return c_;
    case Kind::SinCos:
      return c_ * std::abs(u) * std::sqrt(std::max(0.0, 1.0 - u * u));
    case Kind::Tabulated: {
      const int m = static_cast<int>(table_.size()) - 1;
      double s = (u + 1.0) * 0.5 * m;  // position in table units
      s = std::clamp(s, 0.0, static_cast<double>(m));
      const int i0 = std::min(static_cast<int>(s), m - 1);
      const double t = s - i0;
      return table_[i0] * (1.0 - t) + table_[i0 + 1] * t;
    }
  }
  return 0.0;
}

double AngularPart::sup() const {
  switch (kind_) {
    case Kind::Constant:
      return c_;
    case Kind::SinCos:
      // max of u sqrt(1-u^2) on [0,1] is 1/2 at u = 1/sqrt(2)
      return 0.5 * c_;
    case Kind::Tabulated: {
      // piecewise linear attains its max at a node; the dense scan is a
      // safety net should the interpolation rule ever change
      double best = *std::max_element(table_.begin(), table_.end());
      const int n = 10001;
      for (int i = 0; i < n; ++i) {
        const double u = -1.0 + 2.0 * i / (n - 1);
        best = std::max(best, eval(u));
      }
      return best;
    }
  }
  return 0.0;
}

namespace {

// Adaptive Simpson with absolute-scale control mapped from a relative goal.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double tol, int depth,
                        double* achieved) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = (left + right - whole) / 15.0;
  if (std::abs(err) <= tol || depth >= 48) {
    if (depth >= 48) *achieved = std::max(*achieved, std::abs(err));
    return left + right + err;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth + 1, achieved) +
         adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth + 1, achieved);
}

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double rel_tol) {
  // coarse scale estimate for the relative tolerance
  double scale = 0.0;
  for (int i = 0; i <= 64; ++i) {
    const double u = a + (b - a) * i / 64.0;
    scale += std::abs(f(u));
  }
  scale = std::max(scale * (b - a) / 65.0, 1e-300);
  double achieved = 0.0;
  const double m = 0.5 * (a + b);
  const double val = adaptive_simpson(f, a, b, f(a), f(m), f(b), rel_tol * scale, 0,
                                      &achieved);
  if (achieved > 64.0 * rel_tol * scale)
    throw NumericalError("angular quadrature did not converge; error estimate " +
                         std::to_string(achieved));
  return val;
}

}  // namespace

double AngularPart::l1_sphere() const {
  switch (kind_) {
    case Kind::Constant:
      return kFourPi * c_;
    case Kind::SinCos: {
      // split at the |u| kink; each half is smooth
      auto f = [this](double u) { return eval(u); };
      const double left = integrate_1d(f, -1.0, 0.0, 1e-11);
      const double right = integrate_1d(f, 0.0, 1.0, 1e-11);
      return 2.0 * kPi * (left + right);
    }
    case Kind::Tabulated: {
      // exact integral of the piecewise-linear interpolant
      const int m = static_cast<int>(table_.size()) - 1;
      const double du = 2.0 / m;
      double sum = 0.0;
      for (int i = 0; i < m; ++i) sum += 0.5 * (table_[i] + table_[i + 1]) * du;
      return 2.0 * kPi * sum;
    }
  }
  return 0.0;
}

H4Audit AngularPart::audit_h4(int n_samples) const {
  H4Audit audit;
  double worst = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double u = -1.0 + 2.0 * (i + 0.5) / n_samples;
    const double envelope = std::abs(u) * std::sqrt(std::max(0.0, 1.0 - u * u));
    const double bu = eval(u);
    if (bu <= 0.0) continue;
    if (envelope <= 0.0) {
      worst = std::numeric_limits<double>::infinity();
      break;
    }
    worst = std::max(worst, bu / envelope);
  }
  audit.c_b1 = worst;
  audit.satisfied = std::isfinite(worst);
  if (kind_ == Kind::Tabulated) {
    // slope bound of the interpolant, finite differences at table spacing
    const int m = static_cast<int>(table_.size()) - 1;
    const double du = 2.0 / m;
    double slope = 0.0;
    for (int i = 0; i < m; ++i)
      slope = std::max(slope, std::abs(table_[i + 1] - table_[i]) / du);
    audit.c_b2 = slope;
  }
  return audit;
}

bool AngularPart::same_as(const AngularPart& other) const {
  // pointwise comparison on a dense sample set
  for (int i = 0; i <= 512; ++i) {
    const double u = -1.0 + 2.0 * i / 512.0;
    if (eval(u) != other.eval(u)) return false;
  }
  return true;
}

double b_sup(const AngularPart& b) { return b.sup(); }
double b_l1_sphere(const AngularPart& b) { return b.l1_sphere(); }

// ---------------------------------------------------------------------------
// KernelModel

struct KernelModel::CbCache {
  std::once_flag once;
  double value = 0.0;
};

KernelModel::KernelModel(int n_species, double gamma, std::vector<double> cphi,
                         std::vector<AngularPart> angular)
    : n_(n_species),
      gamma_(gamma),
      cphi_(std::move(cphi)),
      angular_(std::move(angular)),
      cb_cache_(std::make_shared<CbCache>()) {
  if (n_ < 1) throw ValidationError("kernel: need at least one species");
  if (!(gamma_ >= 0.0 && gamma_ <= 1.0))
    throw ValidationError("kernel: gamma must lie in [0, 1]");
  if (static_cast<int>(cphi_.size()) != n_ * n_ ||
      static_cast<int>(angular_.size()) != n_ * n_)
    throw ValidationError("kernel: matrix size mismatch");
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      if (!(cphi_[idx(i, j)] > 0.0))
        throw ValidationError("kernel: Cphi entries must be positive");
      if (cphi_[idx(i, j)] != cphi_[idx(j, i)])
        throw ValidationError("kernel: Cphi must be symmetric");
      if (i < j && !angular_[idx(i, j)].same_as(angular_[idx(j, i)]))
        throw ValidationError("kernel: angular parts must be symmetric");
    }
  }
  b_inf_.resize(n_ * n_);
  l_b_.resize(n_ * n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      b_inf_[idx(i, j)] = angular_[idx(i, j)].sup();
      l_b_[idx(i, j)] = angular_[idx(i, j)].l1_sphere();
    }
  }
}

KernelModel KernelModel::uniform(int n_species, double gamma, double cphi,
                                 const AngularPart& b) {
  std::vector<double> c(n_species * n_species, cphi);
  std::vector<AngularPart> a(n_species * n_species, b);
  return KernelModel(n_species, gamma, std::move(c), std::move(a));
}

double KernelModel::grad_cutoff_cb() const {
  std::call_once(cb_cache_->once,
                 [this] { cb_cache_->value = boltzmix::grad_cutoff_cb(*this, CbOptions{}); });
  return cb_cache_->value;
}

double grad_cutoff_cb(const KernelModel& kernel, const CbOptions& opts) {
  const SphereRule rule = SphereRule::product_rule(opts.quad_degree);
  // (sigma1, sigma2) design: symmetric polar x azimuthal grid
  std::vector<Vec3> design;
  design.reserve(opts.design_polar * opts.design_azimuth);
  for (int p = 0; p < opts.design_polar; ++p) {
    const double ct = -1.0 + 2.0 * (p + 0.5) / opts.design_polar;
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int a = 0; a < opts.design_azimuth; ++a) {
      const double phi = 2.0 * kPi * a / opts.design_azimuth;
      design.push_back({st * std::cos(phi), st * std::sin(phi), ct});
    }
  }
  double cb = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kernel.n_species(); ++i) {
    const AngularPart& b = kernel.angular(i, i);
    // precompute b(s.q) for every design point s against every quadrature
    // node q; the pair loop is then a cheap min-dot
    const int nd = static_cast<int>(design.size());
    const int nq = static_cast<int>(rule.nodes().size());
    std::vector<double> bval(static_cast<std::size_t>(nd) * nq);
    for (int s = 0; s < nd; ++s)
      for (int q = 0; q < nq; ++q)
        bval[static_cast<std::size_t>(s) * nq + q] = b.eval(dot(design[s], rule.nodes()[q]));
    for (int s1 = 0; s1 < nd; ++s1) {
      const double* row1 = &bval[static_cast<std::size_t>(s1) * nq];
      for (int s2 = s1; s2 < nd; ++s2) {
        const double* row2 = &bval[static_cast<std::size_t>(s2) * nq];
        double integral = 0.0;
        for (int q = 0; q < nq; ++q)
          integral += rule.weights()[q] * std::min(row1[q], row2[q]);
        cb = std::min(cb, integral);
      }
    }
  }
  return std::max(cb, 0.0);
}

// ---------------------------------------------------------------------------
// Weight

Weight Weight::polynomial(double k) {
  if (!(k > 0.0)) throw ValidationError("weight: polynomial exponent must be positive");
  Weight w;
  w.kind = Kind::Polynomial;
  w.k = k;
  return w;
}

Weight Weight::exponential(double kappa1, double kappa2) {
  if (!(kappa1 > 0.0)) throw ValidationError("weight: kappa1 must be positive");
  if (!(kappa2 > 0.0 && kappa2 < 2.0))
    throw ValidationError("weight: kappa2 must lie in (0, 2)");
  Weight w;
  w.kind = Kind::Exponential;
  w.kappa1 = kappa1;
  w.kappa2 = kappa2;
  return w;
}

double Weight::eval(double mass, double speed) const {
  if (!(mass > 0.0)) throw ValidationError("weight: mass must be positive");
  const double s = std::sqrt(mass) * speed;
  if (kind == Kind::Polynomial) return std::pow(1.0 + s * s, 0.5 * k);
  return std::exp(kappa1 * std::pow(s, kappa2));
}

double weight_eval(const Weight& w, double mass, const Vec3& v) {
  return w.eval(mass, v);
}

}  // namespace boltzmix
