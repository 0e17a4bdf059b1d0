#include "boltzmix/sphere_rule.hpp"

#include <cmath>

namespace boltzmix {

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration from the Chebyshev-angle initial guess
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

SphereRule SphereRule::product_rule(int degree) {
  if (degree < 1) throw ValidationError("sphere rule: degree must be >= 1");
  const int n_polar = (degree + 2) / 2;  // 2n-1 >= degree
  int n_azim = degree + 1;
  if (n_azim % 2 != 0) ++n_azim;

  std::vector<double> u, wu;
  gauss_legendre(n_polar, u, wu);

  SphereRule rule;
  rule.degree_ = degree;
  rule.nodes_.reserve(static_cast<std::size_t>(n_polar) * n_azim);
  rule.weights_.reserve(static_cast<std::size_t>(n_polar) * n_azim);
  const double wphi = 2.0 * kPi / n_azim;
  for (int p = 0; p < n_polar; ++p) {
    const double ct = u[p];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int a = 0; a < n_azim; ++a) {
      const double phi = 2.0 * kPi * a / n_azim;
      rule.nodes_.push_back({st * std::cos(phi), st * std::sin(phi), ct});
      rule.weights_.push_back(wu[p] * wphi);
    }
  }
  return rule;
}

}  // namespace boltzmix
