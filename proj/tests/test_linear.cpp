#include <cmath>
#include <random>

#include "boltzmix/linear.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace boltzmix;

namespace {

struct Setup {
  Mixture mix;
  KernelModel kernel;
  VelocityGrid grid;
  SphereRule sphere;
  CollisionOperator op;
  Setup(std::vector<double> masses, std::vector<double> dens, double gamma,
        const AngularPart& b, int n, int degree = 7, double cphi = 1.0)
      : mix(std::move(masses), std::move(dens)),
        kernel(KernelModel::uniform(mix.n_species(), gamma, cphi, b)),
        grid(6.0, n),
        sphere(SphereRule::product_rule(degree)),
        op(mix, kernel, grid, sphere) {}
};

}  // namespace

TEST_CASE("mollifier: plateau, support, smooth transition") {
  const Mollifier m(0.1);
  // interior of the plateau
  CHECK(theta_delta(m, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                    {0.0, 0.0, 1.0}) == 1.0);
  // |v - v*| below the support floor
  CHECK(theta_delta(m, {1.0, 0.0, 0.0}, {1.05, 0.0, 0.0}, {0.0, 0.0, 1.0}) == 0.0);
  // grazing angles cut off
  const Vec3 v{1.0, 0.0, 0.0}, vs{-1.0, 0.0, 0.0};
  CHECK(theta_delta(m, v, vs, {1.0, 0.0, 0.0}) == 0.0);       // cos = 1
  CHECK(theta_delta(m, v, vs, {0.0, 1.0, 0.0}) == 1.0);       // cos = 0
  CHECK_THROWS_AS(theta_delta(m, v, vs, {0.0, 0.5, 0.0}), ValidationError);

  // transition band: value strictly inside (0,1), finite differences bounded
  const double mid = m.profile_rel(1.5 * 0.1);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  const double h = 1e-3;
  double worst = 0.0;
  for (int order = 1; order <= 3; ++order) {
    for (double s = 0.11; s < 0.2; s += 0.007) {
      // central differences of increasing order
      double val = 0.0;
      if (order == 1) val = (m.profile_rel(s + h) - m.profile_rel(s - h)) / (2 * h);
      if (order == 2)
        val = (m.profile_rel(s + h) - 2 * m.profile_rel(s) + m.profile_rel(s - h)) /
              (h * h);
      if (order == 3)
        val = (m.profile_rel(s + 2 * h) - 2 * m.profile_rel(s + h) +
               2 * m.profile_rel(s - h) - m.profile_rel(s - 2 * h)) /
              (2 * h * h * h);
      worst = std::max(worst, std::abs(val));
    }
  }
  CHECK(std::isfinite(worst));
  CHECK(worst < 1e7);  // smooth bump profiles stay tame at these scales

  CHECK_THROWS_AS(Mollifier(1.5), ValidationError);
  CHECK(Mollifier::disabled().theta({0, 0, 0}, {1, 0, 0}, {0, 0, 1}) == 0.0);
}

TEST_CASE("mollifier values lie in [0,1] at random arguments") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uu(-8.0, 8.0);
  const Mollifier m(0.2);
  for (int t = 0; t < 500; ++t) {
    const Vec3 v{uu(rng), uu(rng), uu(rng)}, vs{uu(rng), uu(rng), uu(rng)};
    const Vec3 sig = oracles::random_unit(rng);
    const double th = m.theta(v, vs, sig);
    CHECK(th >= 0.0);
    CHECK(th <= 1.0);
  }
}

TEST_CASE("nu_ij: Maxwell molecules give a flat frequency") {
  const Setup s({1.0, 2.0}, {1.0, 0.7}, 0.0, AngularPart::constant(), 16);
  // |v - v*|^0 factorizes, so nu = Cphi l_b c_j times the discrete mass
  const double expect = 1.0 * s.kernel.l_b(0, 1) * 0.7;
  for (const Vec3& v : {Vec3{0, 0, 0}, Vec3{2.1, 0, 0}, Vec3{-1, 3, 0.5}}) {
    const double nu = nu_ij(s.kernel, s.mix, 0, 1, v, s.sphere, s.grid);
    CHECK(nu == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("nu_ij at the origin sits inside the explicit corridor") {
  // hard spheres, unit-scaled density: c_j sqrt(m_j) = 1
  const Setup s({1.0}, {1.0}, 1.0, AngularPart::constant(), 24, 11);
  const double nu0 = nu_ij(s.kernel, s.mix, 0, 0, {0, 0, 0}, s.sphere, s.grid);
  const NuBounds b = nu_bounds(s.kernel, s.mix, 0, 0, {0, 0, 0});
  const double pref = s.kernel.cphi(0, 0) * s.kernel.l_b(0, 0);
  CHECK(b.lower == doctest::Approx(pref * std::sqrt(2.0 / (std::exp(1.0) * kPi))));
  CHECK(b.upper == doctest::Approx(pref * 2.0));
  CHECK(nu0 > b.lower);
  CHECK(nu0 < b.upper);
  // direct value: the speed average of the unit Gaussian is 2 sqrt(2/pi)
  CHECK(nu0 == doctest::Approx(pref * 2.0 * std::sqrt(2.0 / kPi)).epsilon(5e-4));
}

TEST_CASE("nu bounds: ordering and large-speed asymptotics") {
  const Setup s({1.0, 3.0}, {1.0, 1.0 / std::sqrt(3.0)}, 1.0, AngularPart::constant(),
                24, 11);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uu(0.0, 8.0);
  std::uniform_real_distribution<double> um(0.3, 9.0);
  for (int t = 0; t < 1000; ++t) {
    const Mixture mix({1.0, um(rng)}, {1.0, 1.0});
    const KernelModel kern = KernelModel::uniform(2, 1.0, 1.0, AngularPart::constant());
    const NuBounds b = nu_bounds(kern, mix, 0, 1, {uu(rng), 0, 0});
    CHECK(b.lower <= b.upper);
  }
  // nu_ij(v) / |v|^gamma approaches Cphi l_b c_j; ratio settles within 5 %
  const double big = 5.0;
  const double nu_big =
      nu_ij(s.kernel, s.mix, 0, 0, {big, 0, 0}, s.sphere, s.grid);
  const double limit = s.kernel.cphi(0, 0) * s.kernel.l_b(0, 0) * s.mix.density(0);
  CHECK(nu_big / big == doctest::Approx(limit).epsilon(0.05));
}

TEST_CASE("nu_floor assembles the row minimum") {
  const double floor_c = std::sqrt(2.0 / (std::exp(1.0) * kPi));
  const Setup s1({1.0}, {1.0}, 1.0, AngularPart::constant(), 8);
  // mono-species with Cphi l_b = 1: floor is sqrt(2/(e pi))
  const KernelModel unit =
      KernelModel::uniform(1, 1.0, 1.0 / s1.kernel.l_b(0, 0), AngularPart::constant());
  CHECK(nu_floor(unit, s1.mix) == doctest::Approx(floor_c).epsilon(1e-12));

  // doubling every Cphi doubles the floor
  const KernelModel twice =
      KernelModel::uniform(1, 1.0, 2.0 / s1.kernel.l_b(0, 0), AngularPart::constant());
  CHECK(nu_floor(twice, s1.mix) == doctest::Approx(2.0 * floor_c).epsilon(1e-12));

  // two species: the minimum over rows, against exhaustive evaluation
  const Mixture mix({1.0, 4.0}, {1.0, 1.0});
  const KernelModel k2 = KernelModel::uniform(2, 1.0, 1.0, AngularPart::constant());
  double best = 1e300;
  for (int i = 0; i < 2; ++i) {
    double row = 0.0;
    for (int j = 0; j < 2; ++j)
      row += k2.cphi(i, j) * k2.l_b(i, j) / std::pow(mix.mass(j), 1.0) * floor_c;
    best = std::min(best, row);
  }
  CHECK(nu_floor(k2, mix) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("nu node fields dominate the assembled floor") {
  const Setup s({1.0, 2.0}, {1.0, 1.0}, 1.0, AngularPart::constant(), 12, 5);
  const LinearizedOperator lin(s.op);
  CHECK(lin.nu_min() > nu_floor(s.kernel, s.mix));
}

TEST_CASE("split_apply: zero field, disabled mollifier, identity residual") {
  const Setup s({1.0, 2.0}, {1.0, 0.8}, 1.0, AngularPart::constant(), 10, 5);
  const LinearizedOperator lin(s.op);

  // f = 0: every output vanishes
  const DistributionVec zero(s.grid, 2);
  const SplitResult z = split_apply(lin, Mollifier(0.2), zero);
  for (int i = 0; i < 2; ++i) {
    CHECK(max_abs(z.A[i]) == 0.0);
    CHECK(max_abs(z.B[i]) == 0.0);
    CHECK(max_abs(z.nu_f[i]) == 0.0);
    CHECK(max_abs(z.L[i]) == 0.0);
  }

  std::mt19937_64 rng(11);
  const DistributionVec f = random_bump_field(s.grid, 2, rng);

  // disabled mollifier: A = 0 and B = L + nu f
  const SplitResult d = split_apply(lin, Mollifier::disabled(), f);
  double fs = 0.0;
  for (int i = 0; i < 2; ++i) fs = std::max(fs, max_abs(f[i]));
  for (int i = 0; i < 2; ++i) {
    CHECK(max_abs(d.A[i]) == 0.0);
    for (std::int64_t v = 0; v < s.grid.size(); ++v)
      CHECK(std::abs(d.B[i][v] - (d.L[i][v] + d.nu_f[i][v])) < 1e-12 * fs);
  }

  // active mollifier: the splitting identity holds to near rounding
  const SplitResult sr = split_apply(lin, Mollifier(0.2), f);
  CHECK(sr.max_residual < 1e-12 * fs);
}

TEST_CASE("split L agrees with the pair operators applied to mu directions") {
  const Setup s({1.0, 2.0}, {1.0, 0.8}, 1.0, AngularPart::constant(), 10, 5);
  const LinearizedOperator lin(s.op);
  std::mt19937_64 rng(13);
  const DistributionVec f = random_bump_field(s.grid, 2, rng);
  const DistributionVec lf = lin.apply(f);
  SweepOptions loose;
  loose.escape_cap = 1.0;
  for (int i = 0; i < 2; ++i) {
    Field expect(s.grid.size(), 0.0);
    for (int j = 0; j < 2; ++j) {
      const QijResult a = s.op.q_ij(i, j, lin.mu()[i], f[j], loose);
      const QijResult b = s.op.q_ij(i, j, f[i], lin.mu()[j], loose);
      for (std::int64_t v = 0; v < s.grid.size(); ++v)
        expect[v] += a.q[v] + b.q[v];
    }
    const double scale = max_abs(expect) + 1.0;
    for (std::int64_t v = 0; v < s.grid.size(); ++v)
      CHECK(std::abs(lf[i][v] - expect[v]) < 1e-11 * scale);
  }
}

TEST_CASE("audit samples: scale invariance of the Q quotient") {
  const Setup s({1.0}, {1.0}, 1.0, AngularPart::constant(), 10, 5);
  const LinearizedOperator lin(s.op);
  std::mt19937_64 rng(17);
  std::vector<std::pair<DistributionVec, DistributionVec>> pairs;
  pairs.emplace_back(random_bump_field(s.grid, 1, rng), random_bump_field(s.grid, 1, rng));
  const Weight w = Weight::polynomial(7.0);
  const double base = audit_control_Q(lin, w, pairs).constant;
  // doubling both arguments leaves the bilinear quotient unchanged
  auto scaled = pairs;
  for (auto& x : scaled.front().first[0]) x *= 2.0;
  for (auto& x : scaled.front().second[0]) x *= 2.0;
  const double big = audit_control_Q(lin, w, scaled).constant;
  CHECK(big == doctest::Approx(base).epsilon(1e-12));
  CHECK(base > 0.0);
}

TEST_CASE("audit control Q: exponential weight exponent and the gamma=0 fallback") {
  const Setup hs({1.0}, {1.0}, 1.0, AngularPart::constant(), 8, 5);
  const LinearizedOperator lin_hs(hs.op);
  std::mt19937_64 rng(19);
  std::vector<std::pair<DistributionVec, DistributionVec>> pairs;
  pairs.emplace_back(random_bump_field(hs.grid, 1, rng),
                     random_bump_field(hs.grid, 1, rng));
  const Weight we = Weight::exponential(0.5, 1.0);
  const ControlQAudit a = audit_control_Q(lin_hs, we, pairs, 0.5);
  CHECK(a.c_w == doctest::Approx(0.5));
  CHECK_FALSE(a.cw_forced_zero);

  const Setup mm({1.0}, {1.0}, 0.0, AngularPart::constant(), 8, 5);
  const LinearizedOperator lin_mm(mm.op);
  const ControlQAudit b = audit_control_Q(lin_mm, we, pairs);
  CHECK(b.cw_forced_zero);
  CHECK(b.c_w == 0.0);
}

TEST_CASE("audit control A: compact support and zero-sample rejection") {
  const Setup s({1.0}, {1.0}, 1.0, AngularPart::constant(), 12, 5);
  const LinearizedOperator lin(s.op);
  // delta = 0.25: the |v| profile support ends at 8, inside the grid corners
  const Mollifier moll(0.25);
  const SplitOperator split(lin, moll);
  std::mt19937_64 rng(23);
  const DistributionVec f = random_bump_field(s.grid, 1, rng);
  const SplitResult sr = split.apply(f);
  for (std::int64_t v = 0; v < s.grid.size(); ++v)
    if (norm(s.grid.node(v)) > 8.0) CHECK(sr.A[0][v] == 0.0);

  std::vector<DistributionVec> zero_samples;
  zero_samples.emplace_back(s.grid, 1);
  CHECK_THROWS_AS(audit_control_B(split, Weight::polynomial(7.0), zero_samples),
                  ValidationError);
  CHECK_THROWS_AS(audit_control_A(split, Weight::polynomial(7.0), 2.0, zero_samples),
                  ValidationError);
  CHECK_THROWS_AS(audit_control_A(split, Weight::polynomial(7.0), 1.0, zero_samples),
                  ValidationError);
}

TEST_CASE("L applied to mu equals twice the full operator at mu") {
  // L_i(mu) = sum_j [Q_ij(mu_i, mu_j) + Q_ij(mu_i, mu_j)] = 2 Q_i(mu)
  const Setup s({1.0, 2.0}, {1.0, 0.7}, 1.0, AngularPart::constant(), 10, 5);
  const LinearizedOperator lin(s.op);
  const DistributionVec lmu = lin.apply(lin.mu());
  SweepOptions loose;
  loose.escape_cap = 1.0;
  const QFullResult q = s.op.q_full(lin.mu(), loose);
  for (int i = 0; i < 2; ++i) {
    const double scale = max_abs(q.gain[i]);
    for (std::int64_t v = 0; v < s.grid.size(); ++v)
      CHECK(std::abs(lmu[i][v] - 2.0 * q.q[i][v]) < 1e-12 * scale);
  }
}
