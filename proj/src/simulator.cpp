#include "boltzmix/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "boltzmix/equilibrium.hpp"

namespace boltzmix {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("sim: dt must be positive");
  if (!(dt < t_end)) throw ValidationError("sim: dt must be smaller than t_end");
  if (cadence < 1) throw ValidationError("sim: cadence must be >= 1");
  if (!(fit_window > 0.0 && fit_window <= 1.0))
    throw ValidationError("sim: fit window must lie in (0, 1]");
}

FitResult fit_decay_rate(const std::vector<std::pair<double, double>>& series,
                         double window_fraction) {
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw ValidationError("fit: window fraction must lie in (0, 1]");
  const std::size_t n = series.size();
  const std::size_t begin = static_cast<std::size_t>((1.0 - window_fraction) * n);
  if (n - begin < 10) throw ValidationError("fit: need at least 10 points in the window");
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  const std::size_t m = n - begin;
  for (std::size_t i = begin; i < n; ++i) {
    const auto& [t, y] = series[i];
    if (!(y > 0.0)) throw ValidationError("fit: norms in the window must be positive");
    const double ly = std::log(y);
    st += t;
    sy += ly;
    stt += t * t;
    sty += t * ly;
  }
  const double denom = m * stt - st * st;
  if (denom == 0.0) throw ValidationError("fit: degenerate time values");
  const double slope = (m * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / m;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean = sy / m;
  for (std::size_t i = begin; i < n; ++i) {
    const auto& [t, y] = series[i];
    const double ly = std::log(y);
    const double pred = intercept + slope * t;
    ss_res += (ly - pred) * (ly - pred);
    ss_tot += (ly - mean) * (ly - mean);
  }
  FitResult fit;
  fit.lambda = -slope;
  fit.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

DistributionVec shifted_maxwellian(const Mixture& mix, const VelocityGrid& grid,
                                   const std::vector<Vec3>& drifts) {
  if (static_cast<int>(drifts.size()) != mix.n_species())
    throw ValidationError("shifted_maxwellian: one drift per species required");
  DistributionVec F(grid, mix.n_species());
  for (int s = 0; s < mix.n_species(); ++s) {
    const double m = mix.mass(s);
    const double amp = mix.density(s) * std::pow(m / (2.0 * kPi), 1.5);
    const Vec3 u = drifts[s];
    for (std::int64_t v = 0; v < grid.size(); ++v) {
      const Vec3 w = grid.node(v) - u;
      F[s][v] = amp * std::exp(-0.5 * m * norm2(w));
    }
  }
  return F;
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(const CollisionOperator& op, const LinearizedOperator* lin)
    : op_(&op), lin_(lin) {}

namespace {

// (1 - e^-x) / x, the exponential-Euler gain factor
double phi1(double x) {
  if (x == 0.0) return 1.0;
  return -std::expm1(-x) / x;
}

void check_finite(const DistributionVec& F, const char* where) {
  for (int s = 0; s < F.n_species(); ++s)
    for (std::int64_t v = 0; v < static_cast<std::int64_t>(F[s].size()); ++v)
      if (!std::isfinite(F[s][v]))
        throw NumericalError(std::string(where) + ": non-finite value at species " +
                             std::to_string(s + 1) + ", node " + std::to_string(v));
}

// small dense solve with partial pivoting
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (a[piv * n + c] == 0.0) throw NumericalError("projection: singular Gram matrix");
    if (piv != c) {
      for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (int r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (int k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
    x[r] = s / a[r * n + r];
  }
  return x;
}

}  // namespace

DistributionVec Simulator::step_exponential_euler(const DistributionVec& state, double dt,
                                                  const SweepOptions& opts) const {
  const auto gf = op_->gain_and_loss_frequency(state, opts);
  const int n_sp = state.n_species();
  DistributionVec next(state.grid, n_sp);
  for (int s = 0; s < n_sp; ++s) {
    const Field& F = state[s];
    const Field& G = gf.gain[s];
    const Field& nu = gf.freq[s];
    Field& out = next[s];
    for (std::int64_t v = 0; v < static_cast<std::int64_t>(F.size()); ++v) {
      const double x = nu[v] * dt;
      out[v] = std::exp(-x) * F[v] + dt * phi1(x) * G[v];
    }
  }
  check_finite(next, "exponential-euler step");
  return next;
}

DistributionVec Simulator::step_rk2(const DistributionVec& state, double dt,
                                    const SweepOptions& opts) const {
  const auto q1 = op_->q_full(state, opts);
  // stability guard on the explicit integrator
  double numax = 0.0;
  for (int s = 0; s < state.n_species(); ++s) {
    const Field freq = op_->loss_frequency(s, state);
    for (double x : freq) numax = std::max(numax, x);
  }
  if (dt * numax > 2.0)
    throw NumericalError("rk2 step: dt * max loss frequency = " +
                         std::to_string(dt * numax) + " violates the stability guard");
  const int n_sp = state.n_species();
  DistributionVec half(state.grid, n_sp);
  for (int s = 0; s < n_sp; ++s)
    for (std::int64_t v = 0; v < state.grid.size(); ++v)
      half[s][v] = state[s][v] + 0.5 * dt * q1.q[s][v];
  const auto q2 = op_->q_full(half, opts);
  DistributionVec next(state.grid, n_sp);
  for (int s = 0; s < n_sp; ++s)
    for (std::int64_t v = 0; v < state.grid.size(); ++v)
      next[s][v] = state[s][v] + dt * q2.q[s][v];
  check_finite(next, "rk2 step");
  return next;
}

DistributionVec Simulator::step_perturbation(const DistributionVec& f, double dt,
                                             const SweepOptions& opts) const {
  if (!lin_)
    throw ValidationError("perturbation step: linearized operator not provided");
  // explicit part A + B + Q(f,f) = L(f) + nu f + Q(f,f)
  const DistributionVec lf = lin_->apply(f, opts);
  const auto qf = op_->q_full(f, opts);
  const int n_sp = f.n_species();
  DistributionVec next(f.grid, n_sp);
  for (int s = 0; s < n_sp; ++s) {
    const Field& nu = lin_->nu(s);
    for (std::int64_t v = 0; v < f.grid.size(); ++v) {
      const double x = nu[v] * dt;
      const double rhs = lf[s][v] + nu[v] * f[s][v] + qf.q[s][v];
      next[s][v] = std::exp(-x) * f[s][v] + dt * phi1(x) * rhs;
    }
  }
  check_finite(next, "perturbation step");
  return next;
}

DistributionVec Simulator::project_conservation(const DistributionVec& f) const {
  const Mixture& mix = op_->mixture();
  const VelocityGrid& grid = f.grid;
  const int n_sp = mix.n_species();
  const int n_con = n_sp + 4;  // per-species mass, momentum, energy
  const DistributionVec mu = lin_ ? lin_->mu() : maxwellian(mix, grid);

  // constraint functionals evaluated on a distribution
  const auto constraints = [&](const DistributionVec& g) {
    const Moments mom = conserved_moments(mix, g);
    std::vector<double> c(n_con);
    for (int s = 0; s < n_sp; ++s) c[s] = mom.mass[s];
    c[n_sp] = mom.momentum.x;
    c[n_sp + 1] = mom.momentum.y;
    c[n_sp + 2] = mom.momentum.z;
    c[n_sp + 3] = mom.energy;
    return c;
  };

  // basis: mass modes mu_s e_s, momentum modes m_i v_a mu_i, energy mode
  std::vector<DistributionVec> basis;
  basis.reserve(n_con);
  for (int s = 0; s < n_sp; ++s) {
    DistributionVec psi(grid, n_sp);
    psi[s] = mu[s];
    basis.push_back(std::move(psi));
  }
  for (int a = 0; a < 3; ++a) {
    DistributionVec psi(grid, n_sp);
    for (int s = 0; s < n_sp; ++s)
      for (std::int64_t v = 0; v < grid.size(); ++v) {
        const Vec3 node = grid.node(v);
        const double va = (a == 0) ? node.x : (a == 1) ? node.y : node.z;
        psi[s][v] = mix.mass(s) * va * mu[s][v];
      }
    basis.push_back(std::move(psi));
  }
  {
    DistributionVec psi(grid, n_sp);
    for (int s = 0; s < n_sp; ++s)
      for (std::int64_t v = 0; v < grid.size(); ++v)
        psi[s][v] = mix.mass(s) * norm2(grid.node(v)) * mu[s][v];
    basis.push_back(std::move(psi));
  }

  std::vector<double> gram(n_con * n_con);
  for (int a = 0; a < n_con; ++a) {
    const auto ca = constraints(basis[a]);
    for (int b = 0; b < n_con; ++b) gram[b * n_con + a] = ca[b];
  }
  const std::vector<double> coef = solve_dense(gram, constraints(f));

  DistributionVec out = f;
  for (int a = 0; a < n_con; ++a)
    for (int s = 0; s < n_sp; ++s)
      for (std::int64_t v = 0; v < grid.size(); ++v)
        out[s][v] -= coef[a] * basis[a][s][v];
  return out;
}

RunReport Simulator::run(const SimConfig& config, const DistributionVec& initial) const {
  config.validate();
  const Mixture& mix = op_->mixture();
  const VelocityGrid& grid = op_->grid();
  const bool full = (config.mode == SimMode::FullF);
  if (full) {
    for (int s = 0; s < initial.n_species(); ++s)
      for (double v : initial[s])
        if (v < 0.0)
          throw ValidationError("run: full-F mode requires nonnegative initial data");
  }
  if (config.mode == SimMode::Perturbation && !lin_)
    throw ValidationError("run: perturbation mode requires the linearized operator");

  const DistributionVec mu = lin_ ? lin_->mu() : maxwellian(mix, grid);
  const auto wtab = weight_table(config.norm_weight, mix, grid);
  const double mu_norm = weighted_sup_norm(wtab, mu);

  DistributionVec state = initial;
  RunReport rep;

  const auto record = [&](double t) {
    const Moments mom = conserved_moments(mix, state);
    rep.t.push_back(t);
    rep.mass.push_back(mom.mass);
    rep.momentum.push_back(mom.momentum);
    rep.energy.push_back(mom.energy);
    if (full) {
      rep.entropy_series.push_back(entropy(state));
      DistributionVec diff = state;
      for (int s = 0; s < diff.n_species(); ++s)
        for (std::int64_t v = 0; v < grid.size(); ++v) diff[s][v] -= mu[s][v];
      rep.norm.push_back(weighted_sup_norm(wtab, diff));
    } else {
      rep.entropy_series.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.norm.push_back(weighted_sup_norm(wtab, state));
    }
  };

  record(0.0);
  const double norm0 = rep.norm.front();
  // full-F runs start at or below the equilibrium scale, so the guard floor
  // is tied to ||mu||; perturbation norms may legitimately sit far below it
  const double guard_floor = full ? 0.2 * mu_norm : 1e-9 * std::max(mu_norm, 1.0);
  const double blow_threshold = config.blowup_factor * std::max(norm0, guard_floor);

  const auto n_steps = static_cast<std::int64_t>(std::ceil(config.t_end / config.dt - 1e-12));
  rep.completed = true;
  for (std::int64_t step = 1; step <= n_steps; ++step) {
    const double t = std::min(step * config.dt, config.t_end);
    const double dt = t - (step - 1) * config.dt;
    try {
      if (config.mode == SimMode::Perturbation)
        state = step_perturbation(state, dt, config.sweep);
      else if (config.integrator == Integrator::ExponentialEuler)
        state = step_exponential_euler(state, dt, config.sweep);
      else
        state = step_rk2(state, dt, config.sweep);
    } catch (const NumericalError& e) {
      rep.completed = false;
      rep.abort_reason = e.what();
      break;
    }
    if (config.correct_moments) {
      DistributionVec drift = state;
      for (int s = 0; s < drift.n_species(); ++s)
        for (std::int64_t v = 0; v < grid.size(); ++v) drift[s][v] -= initial[s][v];
      const DistributionVec corrected = project_conservation(drift);
      for (int s = 0; s < state.n_species(); ++s)
        for (std::int64_t v = 0; v < grid.size(); ++v)
          state[s][v] = initial[s][v] + corrected[s][v];
    }
    if (step % config.cadence == 0 || step == n_steps) {
      record(t);
      if (rep.norm.back() > blow_threshold) {
        rep.completed = false;
        rep.abort_reason = "norm blow-up: " + std::to_string(rep.norm.back()) +
                           " exceeds " + std::to_string(blow_threshold);
        break;
      }
    }
  }

  // drift rates
  const double e_scale = std::max(std::abs(rep.energy.front()), mix.rho_inf());
  for (std::size_t k = 1; k < rep.t.size(); ++k) {
    const double dt_k = std::max(rep.t[k], config.dt);
    for (int s = 0; s < mix.n_species(); ++s) {
      const double scale = std::max(std::abs(rep.mass.front()[s]), 1e-300);
      rep.mass_drift_rate = std::max(
          rep.mass_drift_rate, std::abs(rep.mass[k][s] - rep.mass.front()[s]) / scale / dt_k);
    }
    const Vec3 dp = rep.momentum[k] - rep.momentum.front();
    rep.momentum_drift_rate =
        std::max(rep.momentum_drift_rate, norm(dp) / mix.rho_inf() / dt_k);
    rep.energy_drift_rate = std::max(
        rep.energy_drift_rate, std::abs(rep.energy[k] - rep.energy.front()) / e_scale / dt_k);
    if (full) {
      const double h_prev = rep.entropy_series[k - 1];
      const double dh = rep.entropy_series[k] - h_prev;
      rep.entropy_max_increase =
          std::max(rep.entropy_max_increase, dh / std::max(std::abs(h_prev), 1e-300));
    }
  }

  // decay fit on the trailing window
  if (norm0 < 1e-9 * std::max(mu_norm, 1.0)) {
    rep.fit_skipped = true;  // started at the quadrature-noise floor
  } else if (rep.completed) {
    std::vector<std::pair<double, double>> series;
    for (std::size_t k = 0; k < rep.t.size(); ++k) series.emplace_back(rep.t[k], rep.norm[k]);
    try {
      rep.fit = fit_decay_rate(series, config.fit_window);
    } catch (const ValidationError&) {
      rep.fit_skipped = true;
    }
  }
  return rep;
}

void RunReport::write_csv(std::ostream& os) const {
  const int n_sp = mass.empty() ? 0 : static_cast<int>(mass.front().size());
  os << "t";
  for (int s = 1; s <= n_sp; ++s) os << ",mass_" << s;
  os << ",px,py,pz,energy,entropy,norm_w\n";
  char buf[64];
  const auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.17g", x);
    os << buf;
  };
  for (std::size_t k = 0; k < t.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", t[k]);
    os << buf;
    for (int s = 0; s < n_sp; ++s) put(mass[k][s]);
    put(momentum[k].x);
    put(momentum[k].y);
    put(momentum[k].z);
    put(energy[k]);
    put(entropy_series[k]);
    put(norm[k]);
    os << "\n";
  }
}

}  // namespace boltzmix
