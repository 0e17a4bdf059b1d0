// Options and diagnostics shared by the lattice collision sweeps.

#pragma once

#include <cstdint>

namespace boltzmix {

struct SweepOptions {
  // Absolute error budgets for envelope pruning; both must be positive for
  // pruning to engage, zero keeps the sweep exact.
  double node_error_budget = 0.0;  // cap on the |error| added to any node
  double mass_error_budget = 0.0;  // cap on the integrated (h^3-summed) error
  // Error out when the share of (v, v*, sigma) samples lost to the domain
  // boundary exceeds this.
  double escape_cap = 1.0;
};

struct SweepStats {
  double escape_fraction = 0.0;
  double pruned_node_bound = 0.0;  // accumulated per-node bound of skipped work
  double pruned_mass_bound = 0.0;
  std::int64_t samples_total = 0;
  std::int64_t samples_evaluated = 0;
  std::int64_t samples_pruned = 0;

  void merge(const SweepStats& o);
  void finalize();
};

}  // namespace boltzmix
