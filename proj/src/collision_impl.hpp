// Internal state of CollisionOperator, shared with the linearized-operator
// implementation.

#pragma once

#include "boltzmix/collision.hpp"
#include "collision_engine.hpp"

namespace boltzmix {

struct CollisionOperator::Impl {
  Mixture mix;
  KernelModel kernel;
  VelocityGrid grid;
  SphereRule sphere;
  std::vector<detail::DiffTables> pair_tables;  // filled for i <= j

  Impl(const Mixture& m, const KernelModel& k, const VelocityGrid& g, const SphereRule& s)
      : mix(m), kernel(k), grid(g), sphere(s) {
    if (k.n_species() != m.n_species())
      throw ValidationError("collision: kernel/mixture species count mismatch");
    const int n = m.n_species();
    pair_tables.resize(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        pair_tables[i * n + j] =
            detail::build_diff_tables(grid, sphere, k.gamma(), k.angular(i, j));
  }

  const detail::DiffTables& tables(int i, int j) const {
    const int n = mix.n_species();
    return (i <= j) ? pair_tables[i * n + j] : pair_tables[j * n + i];
  }

  detail::PairGeom geom(int i, int j) const {
    detail::PairGeom g;
    g.grid = &grid;
    g.sphere = &sphere;
    g.tables = &tables(i, j);
    g.mi = mix.mass(i);
    g.mj = mix.mass(j);
    g.cphi = kernel.cphi(i, j);
    g.gamma = kernel.gamma();
    g.b = &kernel.angular(i, j);
    g.b_constant = (g.b->kind() == AngularPart::Kind::Constant);
    g.b_value = g.b_constant ? g.b->eval(0.0) : 0.0;
    return g;
  }

  void check_species(int i) const {
    if (i < 0 || i >= mix.n_species())
      throw ValidationError("collision: species index out of range");
  }

  void check_field(const Field& f) const {
    if (static_cast<std::int64_t>(f.size()) != grid.size())
      throw ValidationError("collision: field size does not match the grid");
  }
};

}  // namespace boltzmix
