// Uniform cubic velocity lattice and gridded per-species fields.
//
// Nodes are cell centers, -v_max + (l + 1/2) h per axis with h = 2 v_max / n
// and n even, so the node set maps onto itself under v -> -v and the midpoint
// rule kills odd moments exactly. Storage is species-major, nodes in
// lexicographic (x, y, z) order with z fastest.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "boltzmix/common.hpp"

namespace boltzmix {

using Field = std::vector<double>;

class VelocityGrid {
 public:
  VelocityGrid(double v_max, int n_per_axis);

  double v_max() const { return v_max_; }
  int n() const { return n_; }
  double h() const { return h_; }
  std::int64_t size() const { return static_cast<std::int64_t>(n_) * n_ * n_; }
  double cell_volume() const { return h_ * h_ * h_; }

  // (2i - n + 1) * v_max / n == -v_max + (i + 1/2) h, written so that
  // coord(i) == -coord(n-1-i) holds bitwise and odd sums cancel exactly
  double coord(int i) const { return (2 * i - n_ + 1) * (v_max_ / n_); }
  std::int64_t flatten(int ix, int iy, int iz) const {
    return (static_cast<std::int64_t>(ix) * n_ + iy) * n_ + iz;
  }
  Vec3 node(std::int64_t flat) const {
    const int iz = static_cast<int>(flat % n_);
    const int iy = static_cast<int>((flat / n_) % n_);
    const int ix = static_cast<int>(flat / (static_cast<std::int64_t>(n_) * n_));
    return {coord(ix), coord(iy), coord(iz)};
  }

  bool operator==(const VelocityGrid& o) const {
    return v_max_ == o.v_max_ && n_ == o.n_;
  }

  // Default half-width used throughout: 6 / sqrt(min mass), which puts the
  // lightest-species Maxwellian below 2e-8 of its peak at the boundary.
  static double default_v_max(double min_mass) { return 6.0 / std::sqrt(min_mass); }

 private:
  double v_max_;
  int n_;
  double h_;
};

// One gridded field per species.
struct DistributionVec {
  VelocityGrid grid;
  std::vector<Field> values;

  DistributionVec(const VelocityGrid& g, int n_species)
      : grid(g), values(n_species, Field(g.size(), 0.0)) {}

  int n_species() const { return static_cast<int>(values.size()); }
  Field& operator[](int s) { return values[s]; }
  const Field& operator[](int s) const { return values[s]; }
};

// CSV serialization: header row, then one row per (species, node) in
// species-major, lexicographic node order.
void write_csv(std::ostream& os, const DistributionVec& f);
DistributionVec read_csv(std::istream& is);

double max_abs(const Field& f);

}  // namespace boltzmix
