#include "boltzmix/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace boltzmix {

VelocityGrid::VelocityGrid(double v_max, int n_per_axis)
    : v_max_(v_max), n_(n_per_axis), h_(2.0 * v_max / n_per_axis) {
  if (!(v_max > 0.0)) throw ValidationError("grid: v_max must be positive");
  if (n_per_axis < 2 || n_per_axis % 2 != 0)
    throw ValidationError("grid: n_per_axis must be even and >= 2");
}

void write_csv(std::ostream& os, const DistributionVec& f) {
  os << "species,ix,iy,iz,value\n";
  char buf[96];
  const int n = f.grid.n();
  for (int s = 0; s < f.n_species(); ++s) {
    const Field& field = f[s];
    std::int64_t flat = 0;
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        for (int iz = 0; iz < n; ++iz, ++flat) {
          std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g\n", s + 1, ix, iy, iz,
                        field[flat]);
          os << buf;
        }
  }
}

DistributionVec read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("field csv: empty input");
  struct Row {
    int s, ix, iy, iz;
    double v;
  };
  std::vector<Row> rows;
  int n_species = 0, n = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Row r;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%lf", &r.s, &r.ix, &r.iy, &r.iz, &r.v) != 5)
      throw ValidationError("field csv: malformed row: " + line);
    n_species = std::max(n_species, r.s);
    n = std::max({n, r.ix + 1, r.iy + 1, r.iz + 1});
    rows.push_back(r);
  }
  if (n_species == 0 || n == 0) throw ValidationError("field csv: no data rows");
  // the csv does not carry v_max; callers that need physical coordinates
  // attach their own grid, so a unit half-width placeholder is used here
  VelocityGrid grid(1.0, n);
  DistributionVec f(grid, n_species);
  for (const Row& r : rows) f[r.s - 1][grid.flatten(r.ix, r.iy, r.iz)] = r.v;
  return f;
}

double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace boltzmix
