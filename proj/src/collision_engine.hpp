// Internal collision sweep engine.
//
// The bilinear collision sum
//
//   Q_ij(f,g)(v) = Cphi h^3 sum_{v*} sum_s w_s b(cos t) |v-v*|^g
//                  [ f(v') g(v'*) - f(v) g(v*) ]
//
// is evaluated by iterating over lattice velocity differences d = v - v*.
// For a fixed (d, sigma) the post-collision points are v' = v + u1 and
// v'* = v - d + u2 with constant offsets u1, u2, so the trilinear stencil
// (integer base offset + 8 corner weights) is shared by every node v and the
// set of nodes with valid stencils is an index box. The inner loop is then a
// contiguous 8-point gather-dot per field, which vectorizes.
//
// Gain and loss use the same sigma rule and the same lattice sums so that
// the operator identities (bilinearity, splitting consistency) hold to
// rounding accuracy. Off-grid stencils evaluate to zero (zero extension);
// the share of lost samples is reported as the escape fraction.
//
// Optional pruning skips (d, sigma) blocks whose contribution, bounded via
// radial max-envelopes of |f| and |g|, provably stays within caller-supplied
// absolute error budgets (per node and integrated). Budgets of zero disable
// pruning and the sweep is exact.

#pragma once

#include <cstdint>
#include <vector>

#include "boltzmix/grid.hpp"
#include "boltzmix/mixture.hpp"
#include "boltzmix/mollifier.hpp"
#include "boltzmix/sphere_rule.hpp"
#include "boltzmix/sweep_options.hpp"

namespace boltzmix {
namespace detail {

// Per-operator tables on the (2n-1)^3 difference lattice.
struct DiffTables {
  int n = 0;
  int dn = 0;  // 2n-1
  std::vector<double> kin;  // |d|^gamma; the d = 0 entry is 1 for gamma = 0, else 0
  std::vector<double> sb;   // sum_s w_s b(dhat . sigma_s); fixed zhat direction at d = 0

  std::int64_t index(int dx, int dy, int dz) const {
    return (static_cast<std::int64_t>(dx + n - 1) * dn + (dy + n - 1)) * dn + (dz + n - 1);
  }
};

DiffTables build_diff_tables(const VelocityGrid& grid, const SphereRule& sphere,
                             double gamma, const AngularPart& b);

struct PairGeom {
  const VelocityGrid* grid;
  const SphereRule* sphere;
  const DiffTables* tables;
  double mi, mj;
  double cphi;
  double gamma;
  const AngularPart* b;
  bool b_constant;
  double b_value;  // when b_constant
};

// Gain part of Q_ij(f,g); writes Cphi h^3 sum ... into gain (accumulating).
// When gain_rev is non-null, also accumulates the gain part of Q_ji(g,f),
// valid because the sigma rule is antipodally symmetric and the kernel obeys
// the pair symmetry. With self_adjoint set (requires i == j and f == g, so
// that Q_ji(g,f) is the same operator), only the lexicographically positive
// half of the difference lattice is swept and the antipodal half is
// recovered through the reverse output; gain_rev may equal &gain.
void bilinear_gain_sweep(const PairGeom& geom, const Field& f, const Field& g,
                         const SweepOptions& opts, Field& gain, Field* gain_rev,
                         bool self_adjoint, SweepStats& stats);

// Pair contribution of species j to the linearized-operator fields of
// species i: gain parts of A (theta-weighted), B (complement) and
// L = Q_ij(mu_i, f_j) + Q_ij(f_i, mu_j). The mollifier may be null, in which
// case only lgain is filled.
void linearized_gain_sweep(const PairGeom& geom, const Field& fi, const Field& fj,
                           const Field& mu_i, const Field& mu_j,
                           const Mollifier* moll, const Field* pv,
                           const SweepOptions& opts, Field* again, Field* bgain,
                           Field& lgain, SweepStats& stats);

// out[v] += scale * sum_d kin[d] * tab[d] * g[v - d], the multiplicative
// (loss-type) lattice correlation. Exact, no pruning.
void correlate_loss(const VelocityGrid& grid, const DiffTables& tables,
                    const std::vector<double>& tab, const Field& g, double scale,
                    Field& out);

// Mollified sigma sums Prel(|d|) * sum_s w_s b Pang(|cos t|) per difference.
std::vector<double> mollified_sb_table(const VelocityGrid& grid, const SphereRule& sphere,
                                       const AngularPart& b, const Mollifier& moll);

}  // namespace detail
}  // namespace boltzmix
