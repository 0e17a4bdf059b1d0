// Bi-species collision operators Q_ij on the velocity lattice, the closed
// form A-function of the triple sphere integral, and the radial gain-term
// majorant for radially symmetric inputs.

#pragma once

#include <memory>

#include "boltzmix/grid.hpp"
#include "boltzmix/mixture.hpp"
#include "boltzmix/sphere_rule.hpp"
#include "boltzmix/sweep_options.hpp"

namespace boltzmix {

// Pre-collision velocities (v', v'*) producing (v, v*) for masses (m_i, m_j).
// sigma must be unit up to 1e-9. Momentum and kinetic energy are conserved
// exactly up to rounding.
struct PostCollision {
  Vec3 v_prime;
  Vec3 v_star_prime;
};
PostCollision post_collision(const Vec3& v, const Vec3& v_star, const Vec3& sigma,
                             double mi, double mj);

// A(a1..a4) = int over three unit spheres of the delta on
// {a1 s + a2 s* = a3 s' + a4 s'*}; permutation invariant, clamped at zero
// when the radii are incompatible.
double a_function(double a1, double a2, double a3, double a4);

struct QijResult {
  Field q;  // gain - loss
  Field gain;
  Field loss;
  SweepStats stats;
};

struct QFullResult {
  DistributionVec q;
  DistributionVec gain;
  DistributionVec loss;
  SweepStats stats;
};

// Direct deterministic evaluation of the pair operators. Holds the lattice
// tables for one (mixture, kernel, grid, sphere rule) combination; immutable
// and safe to share across threads.
class CollisionOperator {
 public:
  CollisionOperator(const Mixture& mix, const KernelModel& kernel,
                    const VelocityGrid& grid, const SphereRule& sphere);
  ~CollisionOperator();
  CollisionOperator(const CollisionOperator&) = delete;
  CollisionOperator& operator=(const CollisionOperator&) = delete;

  const Mixture& mixture() const;
  const KernelModel& kernel() const;
  const VelocityGrid& grid() const;
  const SphereRule& sphere() const;

  // Q_ij(f, g) with f in the species-i slot and g in the species-j slot.
  QijResult q_ij(int i, int j, const Field& f, const Field& g,
                 const SweepOptions& opts) const;
  QijResult q_ij(int i, int j, const Field& f, const Field& g) const;

  // Q_i(F) = sum_j Q_ij(F_i, F_j) for every i; cross pairs (i < j) are
  // evaluated in a single antipodal sweep covering both directions.
  QFullResult q_full(const DistributionVec& F, const SweepOptions& opts) const;
  QFullResult q_full(const DistributionVec& F) const;

  // State-dependent loss frequency sum_j Cphi_ij int b |v-v*|^g F_j(v*):
  // the loss part of Q_i divided by F_i.
  Field loss_frequency(int i, const DistributionVec& F) const;

  // Gain parts and loss frequencies of every species in one pass.
  struct GainFreq {
    DistributionVec gain;
    DistributionVec freq;
    SweepStats stats;
  };
  GainFreq gain_and_loss_frequency(const DistributionVec& F, const SweepOptions& opts) const;

  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

// Radially symmetric profile r -> F(r) on [0, r_max], piecewise linear on a
// uniform sample grid, zero beyond r_max.
class RadialProfile {
 public:
  RadialProfile(std::vector<double> samples, double r_max);

  double r_max() const { return r_max_; }
  int size() const { return static_cast<int>(samples_.size()); }
  double eval(double r) const;
  double operator()(double r) const { return eval(r); }
  double peak() const;
  // largest radius whose value still exceeds frac * peak
  double support_radius(double frac) const;
  const std::vector<double>& samples() const { return samples_; }

 private:
  std::vector<double> samples_;
  double r_max_;
};

struct MajorantResult {
  double value = 0.0;
  // set when a profile has not decayed below 1e-10 of its peak at r_max
  bool f_tail_truncated = false;
  bool g_tail_truncated = false;
};

// Upper bound for |Q+_ij(F,G)(v)| at |v| = r for radial F, G (kernel without
// the Cphi factor):
//   int int 1{m_i r'^2 + m_j r'*^2 >= m_i r^2} B(r, r', r'*) F(r') G(r'*)
// with B = 16 pi^2 binf (m_i+m_j)^2 / (m_i m_j^2) * r' r'* /
// (r |r'-r'*|^{1-g}) * min{m_i r, m_j r*, m_i r', m_j r'*} and
// r* = sqrt(m_i/m_j r'^2 + r'*^2 - m_i/m_j r^2). The |r'-r'*|^{g-1}
// singularity is integrated analytically on a diagonal strip.
MajorantResult q_plus_radial_majorant(const KernelModel& kernel, double mi, double mj,
                                      int i, int j, const RadialProfile& F,
                                      const RadialProfile& G, double r,
                                      int quad_cells = 1024);

}  // namespace boltzmix
