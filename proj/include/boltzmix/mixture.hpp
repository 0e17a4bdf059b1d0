// Species data, collision kernel models and weight functions.
//
// A kernel B_ij(|v-v*|, cos t) = Cphi_ij |v-v*|^gamma b_ij(cos t) with
// gamma in [0,1] (Maxwell molecules through hard potentials) and a bounded
// angular part b_ij. Derived scalar constants (sup b, the L1 norm of b over
// the sphere, and the pairwise-overlap floor C^b) are what the rest of the
// code consumes.

#pragma once

#include <memory>
#include <vector>

#include "boltzmix/common.hpp"

namespace boltzmix {

// Species masses and equilibrium number densities; immutable once built.
class Mixture {
 public:
  Mixture(std::vector<double> masses, std::vector<double> densities);

  int n_species() const { return static_cast<int>(masses_.size()); }
  double mass(int i) const { return masses_[i]; }
  double density(int i) const { return densities_[i]; }
  const std::vector<double>& masses() const { return masses_; }
  const std::vector<double>& densities() const { return densities_; }

  // Total mass density sum_i m_i c_i.
  double rho_inf() const;

  double min_mass() const;

 private:
  std::vector<double> masses_;
  std::vector<double> densities_;
};

struct H4Audit {
  // Smallest constant with b(u) <= c_b1 |sin||cos| over the sampled u, or
  // +inf when no finite constant exists (e.g. b constant).
  double c_b1 = 0.0;
  bool satisfied = false;
  // Max finite-difference slope |b'(u)| (tabulated kind only, 0 otherwise).
  double c_b2 = 0.0;
};

// Angular collision kernel b(u), u = cos(theta) in [-1, 1].
class AngularPart {
 public:
  enum class Kind { Constant, SinCos, Tabulated };

  // b(u) = value
  static AngularPart constant(double value = 1.0);
  // b(u) = c |u| sqrt(1 - u^2), i.e. c |sin||cos| in the deviation angle
  static AngularPart sincos(double c = 1.0);
  // piecewise-linear samples on a uniform grid over [-1, 1]
  static AngularPart tabulated(std::vector<double> samples);

  Kind kind() const { return kind_; }
  double eval(double u) const;
  double operator()(double u) const { return eval(u); }

  // sup over [-1,1]; exact for the closed forms, node max for tables
  double sup() const;
  // 2*pi * integral of b over [-1,1]; adaptive quadrature for closed forms
  // (rel. tol. 1e-10), exact trapezoid sum for tables
  double l1_sphere() const;

  // Reports the smallest admissible bound constants; never throws.
  H4Audit audit_h4(int n_samples = 20001) const;

  bool same_as(const AngularPart& other) const;

 private:
  AngularPart() = default;
  Kind kind_ = Kind::Constant;
  double c_ = 1.0;
  std::vector<double> table_;
};

double b_sup(const AngularPart& b);
double b_l1_sphere(const AngularPart& b);

struct CbOptions {
  int design_polar = 32;   // polar resolution of the (sigma1, sigma2) design
  int design_azimuth = 32; // azimuthal resolution of the design
  int quad_degree = 17;    // spherical quadrature degree for the sigma3 integral
};

// Collision kernel family for all species pairs.
class KernelModel {
 public:
  // cphi and angular are row-major n x n and must be symmetric.
  KernelModel(int n_species, double gamma, std::vector<double> cphi,
              std::vector<AngularPart> angular);

  // Convenience: same Cphi and angular part for every pair.
  static KernelModel uniform(int n_species, double gamma, double cphi,
                             const AngularPart& b);

  int n_species() const { return n_; }
  double gamma() const { return gamma_; }
  double cphi(int i, int j) const { return cphi_[idx(i, j)]; }
  const AngularPart& angular(int i, int j) const { return angular_[idx(i, j)]; }

  // Cached at construction.
  double b_inf(int i, int j) const { return b_inf_[idx(i, j)]; }
  double l_b(int i, int j) const { return l_b_[idx(i, j)]; }

  // min_i inf_{s1,s2} int min{b_ii(s1.s3), b_ii(s2.s3)} ds3, discretized; the
  // default-resolution value is computed once and cached.
  double grad_cutoff_cb() const;

 private:
  int idx(int i, int j) const { return i * n_ + j; }

  int n_;
  double gamma_;
  std::vector<double> cphi_;
  std::vector<AngularPart> angular_;
  std::vector<double> b_inf_;
  std::vector<double> l_b_;
  struct CbCache;
  std::shared_ptr<CbCache> cb_cache_;
};

// Discretized C^b with explicit resolution (pure, no caching).
double grad_cutoff_cb(const KernelModel& kernel, const CbOptions& opts);

// Per-species velocity weight, w_i(v) >= 1 and radially nondecreasing.
struct Weight {
  enum class Kind { Polynomial, Exponential };

  Kind kind = Kind::Polynomial;
  double k = 7.0;       // polynomial: <sqrt(m) v>^k
  double kappa1 = 1.0;  // exponential: exp(kappa1 (sqrt(m)|v|)^kappa2)
  double kappa2 = 1.0;

  static Weight polynomial(double k);
  static Weight exponential(double kappa1, double kappa2);

  double eval(double mass, double speed) const;
  double eval(double mass, const Vec3& v) const { return eval(mass, norm(v)); }
};

double weight_eval(const Weight& w, double mass, const Vec3& v);

}  // namespace boltzmix
