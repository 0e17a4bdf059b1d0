// Longer-running regression checks: refinement sequences and frozen golden
// values recorded from this implementation.

#include <cmath>
#include <random>

#include "boltzmix/linear.hpp"
#include "boltzmix/simulator.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace boltzmix;

namespace {

SweepOptions loose() {
  SweepOptions o;
  o.escape_cap = 1.0;
  return o;
}

}  // namespace

TEST_CASE("equilibrium annihilation refinement: golden sequence, second order") {
  // mono-species hard spheres on v_max = 6, degree-17 sphere rule; recorded
  // max|Q(mu)| / max mu values with their O(h^2) trend
  const Mixture mix({1.0}, {1.0});
  const KernelModel kernel = KernelModel::uniform(1, 1.0, 1.0, AngularPart::constant());
  const SphereRule sphere = SphereRule::product_rule(17);
  const double golden_n16 = 1.53086;
  const double golden_n24 = 0.748833;
  double measured[2];
  int idx = 0;
  for (int n : {16, 24}) {
    const VelocityGrid grid(6.0, n);
    const CollisionOperator op(mix, kernel, grid, sphere);
    const DistributionVec mu = maxwellian(mix, grid);
    const QFullResult q = op.q_full(mu, loose());
    measured[idx++] = max_abs(q.q[0]) / max_abs(mu[0]);
  }
  CHECK(measured[0] == doctest::Approx(golden_n16).epsilon(1e-3));
  CHECK(measured[1] == doctest::Approx(golden_n24).epsilon(1e-3));
  // h^2 trend: (24/16)^2 = 2.25
  CHECK(measured[0] / measured[1] == doctest::Approx(2.25).epsilon(0.12));
}

TEST_CASE("grad cutoff golden: sincos kernel at the default design") {
  const KernelModel k = KernelModel::uniform(1, 1.0, 1.0, AngularPart::sincos(1.0));
  const double cb = k.grad_cutoff_cb();
  CHECK(cb > 0.0);
  // recorded from the 32x32 azimuthal-polar design, degree-17 quadrature
  CHECK(cb == doctest::Approx(2.914522).epsilon(1e-3));
  // refinement monotonicity: a finer design can only lower the discrete min
  CbOptions coarse;
  coarse.design_polar = 8;
  coarse.design_azimuth = 8;
  CHECK(grad_cutoff_cb(k, coarse) >= cb - 1e-12);
}

TEST_CASE("audit goldens: mono hard spheres, n = 16, degree 17") {
  const Mixture mix({1.0}, {1.0});
  const KernelModel kernel = KernelModel::uniform(1, 1.0, 1.0, AngularPart::constant());
  const SphereRule sphere = SphereRule::product_rule(17);
  const VelocityGrid grid(6.0, 16);
  const CollisionOperator op(mix, kernel, grid, sphere);
  const LinearizedOperator lin(op);
  std::mt19937_64 rng(555);
  std::vector<DistributionVec> samples;
  std::vector<std::pair<DistributionVec, DistributionVec>> pairs;
  for (int t = 0; t < 12; ++t) {
    samples.push_back(random_bump_field(grid, 1, rng));
    pairs.emplace_back(random_bump_field(grid, 1, rng), random_bump_field(grid, 1, rng));
  }
  const Weight w7 = Weight::polynomial(7.0);

  SUBCASE("polynomial B quotient stays below one at small delta") {
    const SplitOperator split(lin, Mollifier(0.05));
    const double q = audit_control_B(split, w7, samples);
    CHECK(q < 1.0);
    CHECK(q == doctest::Approx(0.072058).epsilon(0.02));
  }

  SUBCASE("exponential-weight B quotient trends down with delta") {
    const Weight we = Weight::exponential(0.5, 1.0);
    double prev = 1e300;
    for (double delta : {0.2, 0.1, 0.05}) {
      const SplitOperator split(lin, Mollifier(delta));
      const double q = audit_control_B(split, we, samples);
      CHECK(q < prev * 1.10);  // non-increasing within 10 % noise
      prev = q;
    }
  }

  SUBCASE("Q and A audit constants are finite and reproducible") {
    const ControlQAudit cq = audit_control_Q(lin, w7, pairs);
    CHECK(std::isfinite(cq.constant));
    CHECK(cq.constant == doctest::Approx(0.017346).epsilon(0.02));
    const SplitOperator split(lin, Mollifier(0.2));
    const double ca = audit_control_A(split, w7, 2.0, samples);
    CHECK(std::isfinite(ca));
    CHECK(ca > 0.0);
  }
}

TEST_CASE("equilibrium run drifts stay near the discrete fixed point") {
  // mono-species, n = 16: the exponential-Euler iteration contracts toward
  // its own fixed point near mu; recorded drift envelope
  const Mixture mix({1.0}, {1.0});
  const KernelModel kernel = KernelModel::uniform(1, 1.0, 1.0, AngularPart::constant());
  const SphereRule sphere = SphereRule::product_rule(17);
  const VelocityGrid grid(6.0, 16);
  const CollisionOperator op(mix, kernel, grid, sphere);
  const Simulator sim(op);
  const DistributionVec mu = maxwellian(mix, grid);
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 10.0;
  cfg.cadence = 10;
  cfg.sweep = loose();
  cfg.norm_weight = Weight::polynomial(2.0);
  cfg.blowup_factor = 1e9;
  const RunReport rep = sim.run(cfg, mu);
  CHECK(rep.completed);
  double worst = 0.0;
  for (double nrm : rep.norm) worst = std::max(worst, nrm);
  const double mu_norm = weighted_sup_norm(Weight::polynomial(2.0), mix, mu);
  // recorded envelope at this resolution; the state settles at the discrete
  // fixed point an O(h^2) distance from the sampled Maxwellian
  CHECK(worst / mu_norm < 1.0);  // recorded 8.52e-1
  CHECK(rep.mass_drift_rate < 0.35);   // recorded 2.21e-1
  CHECK(rep.energy_drift_rate < 1.8);  // recorded 1.34
}

TEST_CASE("full relaxation run: momenta exchange while the total holds") {
  // two species with opposite drifts relax toward a common equilibrium; the
  // per-species momenta decay while the total stays put
  const Mixture mix({1.0, 2.0}, {1.0, 1.0});
  const KernelModel kernel = KernelModel::uniform(2, 1.0, 1.0, AngularPart::constant());
  const SphereRule sphere = SphereRule::product_rule(11);
  const VelocityGrid grid(6.0, 16);
  const CollisionOperator op(mix, kernel, grid, sphere);
  const Simulator sim(op);
  DistributionVec state =
      shifted_maxwellian(mix, grid, {{0.4, 0.0, 0.0}, {-0.2, 0.0, 0.0}});

  const auto species_px = [&](const DistributionVec& F, int s) {
    double px = 0.0;
    for (std::int64_t v = 0; v < grid.size(); ++v) px += grid.node(v).x * F[s][v];
    return px * mix.mass(s) * grid.cell_volume();
  };
  const double px1_0 = species_px(state, 0);
  const double total_0 = px1_0 + species_px(state, 1);
  double h_prev = entropy(state);
  bool entropy_monotone = true;
  for (int step = 0; step < 15; ++step) {
    state = sim.step_exponential_euler(state, 0.2, loose());
    const double h = entropy(state);
    if (h > h_prev + 1e-6 * std::abs(h_prev)) entropy_monotone = false;
    h_prev = h;
  }
  CHECK(entropy_monotone);
  const double px1_T = species_px(state, 0);
  const double total_T = px1_T + species_px(state, 1);
  // species momentum equilibrates
  CHECK(std::abs(px1_T) < 0.1 * std::abs(px1_0));
  // the total drifts at the O(h^2) exchange-error level; recorded 0.106 of
  // the exchanged momentum at this resolution
  CHECK(std::abs(total_T - total_0) < 0.3 * std::abs(px1_0));
}

TEST_CASE("moment-corrected stepping pins the invariants") {
  const Mixture mix({1.0, 2.0}, {1.0, 1.0});
  const KernelModel kernel = KernelModel::uniform(2, 1.0, 1.0, AngularPart::constant());
  const SphereRule sphere = SphereRule::product_rule(7);
  const VelocityGrid grid(6.0, 12);
  const CollisionOperator op(mix, kernel, grid, sphere);
  const Simulator sim(op);
  const DistributionVec initial =
      shifted_maxwellian(mix, grid, {{0.3, 0.0, 0.0}, {-0.15, 0.0, 0.0}});
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  cfg.correct_moments = true;
  cfg.sweep = loose();
  const RunReport rep = sim.run(cfg, initial);
  REQUIRE(rep.completed);
  CHECK(rep.mass_drift_rate < 1e-11);
  CHECK(rep.momentum_drift_rate < 1e-11);
  CHECK(rep.energy_drift_rate < 1e-11);
}

TEST_CASE("perturbation decay with per-step projection is cleanly exponential") {
  // the discrete linearized operator carries spurious near-kernel modes
  // whose eigenvalues sit at the quadrature-error scale; projecting the
  // conserved moments out each step leaves a clean exponential decay
  const Mixture mix({1.0}, {1.0});
  const KernelModel kernel = KernelModel::uniform(1, 1.0, 1.0, AngularPart::constant());
  const SphereRule sphere = SphereRule::product_rule(17);
  const VelocityGrid grid(6.0, 16);
  const CollisionOperator op(mix, kernel, grid, sphere);
  const LinearizedOperator lin(op);
  const Simulator sim(op, &lin);
  std::mt19937_64 rng(2024);
  DistributionVec bump = random_bump_field(grid, 1, rng);
  const double scale = 1e-3 * max_abs(lin.mu()[0]) / max_abs(bump[0]);
  for (auto& x : bump[0]) x *= scale;
  const DistributionVec f0 = sim.project_conservation(bump);
  SimConfig cfg;
  cfg.mode = SimMode::Perturbation;
  cfg.dt = 0.05;
  cfg.t_end = 2.5;
  cfg.norm_weight = Weight::polynomial(7.0);
  cfg.correct_moments = true;
  SweepOptions o;
  o.escape_cap = 1.0;
  cfg.sweep = o;
  const RunReport rep = sim.run(cfg, f0);
  REQUIRE(rep.completed);
  REQUIRE(rep.fit.has_value());
  CHECK(rep.fit->lambda > 0.0);
  CHECK(rep.fit->lambda == doctest::Approx(6.83).epsilon(0.05));  // recorded
  CHECK(rep.fit->r_squared > 0.98);
  CHECK(rep.norm.back() < 0.1 * rep.norm.front());
}
