#include <cmath>
#include <random>

#include "boltzmix/collision.hpp"
#include "boltzmix/equilibrium.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace boltzmix;

namespace {

RadialProfile gaussian_profile(double center, double width, double r_max = 10.0,
                               int n = 301) {
  std::vector<double> s(n);
  for (int k = 0; k < n; ++k) {
    const double r = r_max * k / (n - 1.0);
    s[k] = std::exp(-0.5 * (r - center) * (r - center) / (width * width));
  }
  return RadialProfile(std::move(s), r_max);
}

}  // namespace

TEST_CASE("radial profile basics") {
  const RadialProfile p = gaussian_profile(1.0, 0.5);
  CHECK(p.eval(1.0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p.eval(11.0) == 0.0);
  CHECK(p.peak() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p.support_radius(1e-3) < 10.0);
  CHECK_THROWS_AS(RadialProfile({1.0}, 1.0), ValidationError);
}

TEST_CASE("majorant vanishes when the energy indicator is empty on support") {
  // F, G supported in r' <= a, r'* <= b with m_i a^2 + m_j b^2 < m_i r^2
  const KernelModel kernel = KernelModel::uniform(2, 1.0, 1.0, AngularPart::constant());
  const double a = 0.5, b = 0.5;
  std::vector<double> sf(64, 0.0), sg(64, 0.0);
  for (int k = 0; k < 16; ++k) sf[k] = sg[k] = 1.0;  // support [0, ~a]
  const RadialProfile F(sf, 2.0 * a), G(sg, 2.0 * b);
  const double mi = 1.0, mj = 2.0;
  const double r = 2.0;  // mi a^2 + mj b^2 = 0.75 < mi r^2 = 4
  const MajorantResult res = q_plus_radial_majorant(kernel, mi, mj, 0, 1, F, G, r);
  CHECK(res.value == 0.0);
}

TEST_CASE("majorant is exactly linear in the first profile") {
  const KernelModel kernel = KernelModel::uniform(1, 0.5, 1.0, AngularPart::constant());
  const RadialProfile F = gaussian_profile(1.0, 0.7);
  const RadialProfile G = gaussian_profile(0.5, 0.9);
  std::vector<double> scaled = F.samples();
  for (auto& x : scaled) x *= 3.5;
  const RadialProfile F3(scaled, F.r_max());
  const double base = q_plus_radial_majorant(kernel, 1.0, 1.0, 0, 0, F, G, 1.0).value;
  const double big = q_plus_radial_majorant(kernel, 1.0, 1.0, 0, 0, F3, G, 1.0).value;
  CHECK(big == doctest::Approx(3.5 * base).epsilon(1e-12));
}

TEST_CASE("majorant flags truncated profiles") {
  // wide Gaussian cut off well before decaying
  const RadialProfile F = gaussian_profile(0.0, 5.0, 4.0);
  const RadialProfile G = gaussian_profile(0.0, 0.3, 10.0);
  const KernelModel kernel = KernelModel::uniform(1, 1.0, 1.0, AngularPart::constant());
  const MajorantResult res = q_plus_radial_majorant(kernel, 1.0, 1.0, 0, 0, F, G, 1.0);
  CHECK(res.f_tail_truncated);
  CHECK_FALSE(res.g_tail_truncated);
}

TEST_CASE("majorant quadrature is stable under refinement") {
  const KernelModel kernel = KernelModel::uniform(1, 0.3, 1.0, AngularPart::constant());
  const RadialProfile F = gaussian_profile(1.2, 0.6);
  const RadialProfile G = gaussian_profile(0.8, 0.5);
  const double coarse = q_plus_radial_majorant(kernel, 1.0, 1.0, 0, 0, F, G, 1.0, 512).value;
  const double fine = q_plus_radial_majorant(kernel, 1.0, 1.0, 0, 0, F, G, 1.0, 2048).value;
  CHECK(coarse == doctest::Approx(fine).epsilon(5e-3));
}

TEST_CASE("majorant dominates the direct gain from the lattice operator") {
  // equal masses, hard spheres, Gaussian profiles, |v| = 1
  const Mixture mix({1.0, 1.0}, {1.0, 1.0});
  const KernelModel kernel = KernelModel::uniform(2, 1.0, 1.0, AngularPart::constant());
  const VelocityGrid grid(6.0, 20);
  const SphereRule sphere = SphereRule::product_rule(11);
  const CollisionOperator op(mix, kernel, grid, sphere);

  const RadialProfile F = gaussian_profile(0.0, 1.0, 10.0);
  const RadialProfile G = gaussian_profile(0.0, 1.2, 10.0);
  Field f(grid.size()), g(grid.size());
  for (std::int64_t v = 0; v < grid.size(); ++v) {
    const double r = norm(grid.node(v));
    f[v] = F.eval(r);
    g[v] = G.eval(r);
  }
  SweepOptions o;
  o.escape_cap = 1.0;
  const QijResult q = op.q_ij(0, 1, f, g, o);
  // gain at the node closest to |v| = 1
  std::int64_t best = 0;
  double dist = 1e300;
  for (std::int64_t v = 0; v < grid.size(); ++v) {
    const double d = std::abs(norm(grid.node(v)) - 1.0);
    if (d < dist) {
      dist = d;
      best = v;
    }
  }
  const double r_eval = norm(grid.node(best));
  const double direct = q.gain[best];  // Cphi = 1, matches the kernel-only gain
  const MajorantResult maj = q_plus_radial_majorant(kernel, 1.0, 1.0, 0, 1, F, G, r_eval);
  CHECK(direct < maj.value);
  CHECK(maj.value > 0.0);
}

TEST_CASE("majorant rejects bad inputs") {
  const KernelModel kernel = KernelModel::uniform(1, 1.0, 1.0, AngularPart::constant());
  const RadialProfile F = gaussian_profile(1.0, 0.5);
  CHECK_THROWS_AS(q_plus_radial_majorant(kernel, 1.0, 1.0, 0, 0, F, F, -1.0),
                  ValidationError);
  std::vector<double> neg(32, 1.0);
  neg[3] = -0.5;
  const RadialProfile bad(neg, 5.0);
  CHECK_THROWS_AS(q_plus_radial_majorant(kernel, 1.0, 1.0, 0, 0, bad, F, 1.0),
                  ValidationError);
}
