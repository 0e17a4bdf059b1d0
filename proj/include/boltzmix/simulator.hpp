// Space-homogeneous time integration of the multi-species system with an
// exponential-Euler scheme: the local loss is treated exactly,
//
//   F^{n+1} = e^{-nu~ dt} F^n + (1 - e^{-nu~ dt}) / nu~ * Q+(F^n),
//
// with nu~ the state-dependent loss frequency. In perturbation mode the
// stiff part is the equilibrium frequency nu and the explicit part is
// A + B + Q(f, f) = L + nu f + Q(f, f). An explicit RK2 integrator is kept
// as a cross-check.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "boltzmix/linear.hpp"

namespace boltzmix {

enum class SimMode { FullF, Perturbation };
enum class Integrator { ExponentialEuler, ExplicitRk2 };

struct SimConfig {
  double dt = 0.1;
  double t_end = 1.0;
  SimMode mode = SimMode::FullF;
  Integrator integrator = Integrator::ExponentialEuler;
  int cadence = 1;               // record monitors every this many steps
  Weight norm_weight = Weight::polynomial(7.0);
  std::uint64_t seed = 0;
  double fit_window = 0.6;       // trailing fraction used for the decay fit
  double blowup_factor = 10.0;   // abort when the norm grows by this factor
  bool correct_moments = false;  // re-project conserved moments each step
  SweepOptions sweep;

  void validate() const;
};

struct FitResult {
  double lambda = 0.0;
  double r_squared = 0.0;
};

// Least-squares slope of log(norm) over the trailing window. Requires at
// least 10 points in the window, all norms positive.
FitResult fit_decay_rate(const std::vector<std::pair<double, double>>& series,
                         double window_fraction);

struct RunReport {
  std::vector<double> t;
  std::vector<std::vector<double>> mass;  // [step][species]
  std::vector<Vec3> momentum;
  std::vector<double> energy;
  std::vector<double> entropy_series;  // NaN entries in perturbation mode
  std::vector<double> norm;            // weighted sup-norm of F - mu or f

  bool completed = false;
  std::string abort_reason;
  std::optional<FitResult> fit;
  bool fit_skipped = false;  // initial norm at the quadrature-noise floor

  // max relative drifts over the run, per unit time
  double mass_drift_rate = 0.0;      // worst species, relative to c_i
  double momentum_drift_rate = 0.0;  // relative to rho_inf
  double energy_drift_rate = 0.0;    // relative to the initial energy
  double entropy_max_increase = 0.0; // max step increase relative to |H|

  void write_csv(std::ostream& os) const;
};

class Simulator {
 public:
  // The linearized operator is only required in perturbation mode.
  Simulator(const CollisionOperator& op, const LinearizedOperator* lin = nullptr);

  // One exponential-Euler step of the full distribution; state must be
  // nonnegative, the output then is as well.
  DistributionVec step_exponential_euler(const DistributionVec& state, double dt,
                                         const SweepOptions& opts = {}) const;

  DistributionVec step_rk2(const DistributionVec& state, double dt,
                           const SweepOptions& opts = {}) const;

  // One step of the perturbation scheme around mu.
  DistributionVec step_perturbation(const DistributionVec& f, double dt,
                                    const SweepOptions& opts = {}) const;

  RunReport run(const SimConfig& config, const DistributionVec& initial) const;

  // Removes the discrete conserved-moment content from f: per-species mass,
  // total momentum, total energy all vanish on the lattice afterwards.
  DistributionVec project_conservation(const DistributionVec& f) const;

  const CollisionOperator& collision() const { return *op_; }

 private:
  const CollisionOperator* op_;
  const LinearizedOperator* lin_;
};

// Shifted-Maxwellian initial data, species s drifting with velocity u_s.
DistributionVec shifted_maxwellian(const Mixture& mix, const VelocityGrid& grid,
                                   const std::vector<Vec3>& drifts);

}  // namespace boltzmix
