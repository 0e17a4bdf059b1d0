#include "boltzmix/equilibrium.hpp"

#include <cmath>

#include "boltzmix/parallel.hpp"

namespace boltzmix {

DistributionVec maxwellian(const Mixture& mix, const VelocityGrid& grid) {
  DistributionVec mu(grid, mix.n_species());
  for (int s = 0; s < mix.n_species(); ++s) {
    const double m = mix.mass(s);
    const double amp = mix.density(s) * std::pow(m / (2.0 * kPi), 1.5);
    Field& out = mu[s];
    const int n = grid.n();
    for (int ix = 0; ix < n; ++ix) {
      const double vx = grid.coord(ix);
      for (int iy = 0; iy < n; ++iy) {
        const double vy = grid.coord(iy);
        std::int64_t flat = grid.flatten(ix, iy, 0);
        for (int iz = 0; iz < n; ++iz, ++flat) {
          const double vz = grid.coord(iz);
          out[flat] = amp * std::exp(-0.5 * m * (vx * vx + vy * vy + vz * vz));
        }
      }
    }
  }
  return mu;
}

Moments conserved_moments(const Mixture& mix, const DistributionVec& F) {
  Moments mom;
  mom.mass.assign(F.n_species(), 0.0);
  const VelocityGrid& grid = F.grid;
  const double h3 = grid.cell_volume();
  const int n = grid.n();
  for (int s = 0; s < F.n_species(); ++s) {
    const double m = mix.mass(s);
    const Field& field = F[s];
    // axis-plane reductions; the momentum then folds symmetric coordinate
    // pairs so that even fields produce exact zeros
    std::vector<double> mx(n, 0.0), my(n, 0.0), mz(n, 0.0);
    std::int64_t flat = 0;
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        double row = 0.0;
        for (int iz = 0; iz < n; ++iz, ++flat) {
          const double f = field[flat];
          row += f;
          mz[iz] += f;
        }
        my[iy] += row;
        mx[ix] += row;
      }
    }
    double mass = 0.0;
    for (int ix = 0; ix < n; ++ix) mass += mx[ix];
    double px = 0.0, py = 0.0, pz = 0.0, en = 0.0;
    for (int i = 0; i < n / 2; ++i) {
      const double c = grid.coord(i);
      px += c * (mx[i] - mx[n - 1 - i]);
      py += c * (my[i] - my[n - 1 - i]);
      pz += c * (mz[i] - mz[n - 1 - i]);
    }
    for (int i = 0; i < n; ++i) {
      const double c2 = grid.coord(i) * grid.coord(i);
      en += c2 * (mx[i] + my[i] + mz[i]);
    }
    mom.mass[s] = mass * h3;
    mom.momentum += Vec3{px, py, pz} * (m * h3);
    mom.energy += en * m * h3;
  }
  return mom;
}

double entropy(const DistributionVec& F) {
  const double h3 = F.grid.cell_volume();
  double H = 0.0;
  for (int s = 0; s < F.n_species(); ++s) {
    const Field& field = F[s];
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(field.size()); ++i) {
      const double f = field[i];
      if (f < 0.0)
        throw ValidationError("entropy: negative value at species " +
                              std::to_string(s + 1) + ", node " + std::to_string(i));
      if (f > 0.0) H += f * std::log(f);
    }
  }
  return H * h3;
}

std::vector<Field> weight_table(const Weight& w, const Mixture& mix,
                                const VelocityGrid& grid) {
  std::vector<Field> tab(mix.n_species(), Field(grid.size()));
  for (int s = 0; s < mix.n_species(); ++s) {
    const double m = mix.mass(s);
    Field& out = tab[s];
    for (std::int64_t i = 0; i < grid.size(); ++i) out[i] = w.eval(m, grid.node(i));
  }
  return tab;
}

double weighted_sup_norm(const std::vector<Field>& wtab, const DistributionVec& f) {
  double total = 0.0;
  for (int s = 0; s < f.n_species(); ++s) {
    const Field& field = f[s];
    const Field& wt = wtab[s];
    double sup = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i)
      sup = std::max(sup, std::abs(field[i]) * wt[i]);
    total += sup;
  }
  return total;
}

double weighted_sup_norm(const Weight& w, const Mixture& mix, const DistributionVec& f) {
  return weighted_sup_norm(weight_table(w, mix, f.grid), f);
}

}  // namespace boltzmix
