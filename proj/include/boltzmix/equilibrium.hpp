// Global Maxwellian, conserved moments, entropy and weighted sup-norms on the
// velocity lattice. All integrals are the midpoint rule, weight h^3 per node.

#pragma once

#include "boltzmix/grid.hpp"
#include "boltzmix/mixture.hpp"

namespace boltzmix {

// mu_i(v) = c_i (m_i / 2 pi)^{3/2} exp(-m_i |v|^2 / 2) sampled at the nodes.
DistributionVec maxwellian(const Mixture& mix, const VelocityGrid& grid);

struct Moments {
  std::vector<double> mass;  // per species, int F_i dv
  Vec3 momentum;             // sum_i int m_i v F_i dv
  double energy = 0.0;       // sum_i int m_i |v|^2 F_i dv
};

Moments conserved_moments(const Mixture& mix, const DistributionVec& F);

// H(F) = sum_i int F_i log F_i dv with 0 log 0 = 0; F must be nonnegative.
double entropy(const DistributionVec& F);

// Per-species weight values at the nodes.
std::vector<Field> weight_table(const Weight& w, const Mixture& mix,
                                const VelocityGrid& grid);

// sum_i max_v |f_i(v)| w_i(v)
double weighted_sup_norm(const Weight& w, const Mixture& mix, const DistributionVec& f);
double weighted_sup_norm(const std::vector<Field>& wtab, const DistributionVec& f);

}  // namespace boltzmix
