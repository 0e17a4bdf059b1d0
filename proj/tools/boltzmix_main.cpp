// Command line front end: config ingestion, subcommand dispatch, result
// persistence. Series go to CSV, scalars and provenance to JSON.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "boltzmix/config.hpp"
#include "boltzmix/linear.hpp"
#include "boltzmix/parallel.hpp"
#include "boltzmix/thresholds.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace boltzmix;

namespace {

constexpr const char* kVersion = "boltzmix 0.1.0";

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int grid_n = 0;
  int sphere_degree = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file")->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--set", args.overrides, "override, section.key=value (repeatable)");
  cmd->add_option("--seed", args.seed, "random seed override")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--grid-n", args.grid_n, "grid nodes per axis override");
  cmd->add_option("--sphere-degree", args.sphere_degree, "sphere rule degree override");
}

Config load_config(const CommonArgs& args) {
  Config cfg = Config::parse_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--set expects section.key=value, got " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed_set) cfg.set("sim.seed", std::to_string(args.seed));
  if (args.grid_n > 0) cfg.set("grid.n", std::to_string(args.grid_n));
  if (args.sphere_degree > 0)
    cfg.set("sphere.degree", std::to_string(args.sphere_degree));
  return cfg;
}

json provenance(const Config& cfg, const ProblemSetup& setup) {
  json prov;
  prov["tool"] = kVersion;
  prov["seed"] = setup.sim.seed;
  prov["grid"] = {{"n", setup.grid.n()}, {"v_max", setup.grid.v_max()}};
  prov["sphere_degree"] = setup.sphere_degree;
  prov["threads"] = worker_count();
  json echo;
  for (const auto& [k, v] : cfg.flattened()) echo[k] = v;
  prov["config"] = echo;
  return prov;
}

std::ofstream open_out(const CommonArgs& args, const std::string& name) {
  fs::create_directories(args.out_dir);
  const fs::path path = fs::path(args.out_dir) / name;
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path.string());
  return os;
}

void write_json(const CommonArgs& args, const std::string& name, const json& j) {
  auto os = open_out(args, name);
  os << j.dump(2) << "\n";
}

int run_threshold(const CommonArgs& args) {
  const Config cfg = load_config(args);
  const ProblemSetup setup = build_setup(cfg);
  const ThresholdReport rep = threshold_report(setup.mixture, setup.kernel);
  auto csv = open_out(args, "threshold.csv");
  csv << "k,c_b\n";
  char buf[64];
  for (const auto& [k, cb] : rep.curve) {
    std::snprintf(buf, sizeof buf, "%g,%.17g\n", k, cb);
    csv << buf;
  }
  json j = provenance(cfg, setup);
  j["k0"] = rep.k0;
  j["floor_bound"] = rep.floor_bound;
  j["argmax_species"] = rep.argmax_species;
  j["inner_sum"] = rep.inner_sum;
  j["mass_sum"] = rep.mass_sum;
  j["recommended_k"] = rep.recommended_k;
  j["c_b_exponential"] = c_b_exponential();
  write_json(args, "threshold.json", j);
  std::cout << "k0 = " << rep.k0 << (rep.floor_bound ? " (floor bound)" : "") << "\n";
  return 0;
}

int run_nu(const CommonArgs& args) {
  const Config cfg = load_config(args);
  const ProblemSetup setup = build_setup(cfg);
  const SphereRule sphere = SphereRule::product_rule(setup.sphere_degree);
  const int n_sweep = cfg.get_int_or("nu", "points", 20);
  const double vmax = setup.grid.v_max();
  auto csv = open_out(args, "nu.csv");
  csv << "i,j,speed,nu,lower,upper\n";
  char buf[160];
  for (int i = 0; i < setup.mixture.n_species(); ++i) {
    for (int j = 0; j < setup.mixture.n_species(); ++j) {
      for (int k = 0; k < n_sweep; ++k) {
        const double speed = vmax * k / (n_sweep - 1.0);
        const Vec3 v{speed, 0.0, 0.0};
        const double nu = nu_ij(setup.kernel, setup.mixture, i, j, v, sphere, setup.grid);
        const NuBounds b = nu_bounds(setup.kernel, setup.mixture, i, j, v);
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", i + 1, j + 1,
                      speed, nu, b.lower, b.upper);
        csv << buf;
      }
    }
  }
  json j = provenance(cfg, setup);
  j["nu_floor"] = nu_floor(setup.kernel, setup.mixture);
  write_json(args, "nu.json", j);
  return 0;
}

int run_collide(const CommonArgs& args) {
  const Config cfg = load_config(args);
  const ProblemSetup setup = build_setup(cfg);
  const SphereRule sphere = SphereRule::product_rule(setup.sphere_degree);
  const CollisionOperator op(setup.mixture, setup.kernel, setup.grid, sphere);
  const DistributionVec mu = maxwellian(setup.mixture, setup.grid);
  const QFullResult q = op.q_full(mu, setup.sim.sweep);
  auto csv = open_out(args, "collide_field.csv");
  write_csv(csv, q.q);
  json j = provenance(cfg, setup);
  const Moments mom = conserved_moments(setup.mixture, q.q);
  j["mass_rate"] = mom.mass;
  j["momentum_rate"] = {mom.momentum.x, mom.momentum.y, mom.momentum.z};
  j["energy_rate"] = mom.energy;
  j["escape_fraction"] = q.stats.escape_fraction;
  for (int s = 0; s < q.q.n_species(); ++s) j["max_q"].push_back(max_abs(q.q[s]));
  write_json(args, "collide.json", j);
  return 0;
}

int run_split_check(const CommonArgs& args) {
  const Config cfg = load_config(args);
  const ProblemSetup setup = build_setup(cfg);
  const SphereRule sphere = SphereRule::product_rule(setup.sphere_degree);
  const CollisionOperator op(setup.mixture, setup.kernel, setup.grid, sphere);
  const LinearizedOperator lin(op);
  const SplitOperator split(lin, Mollifier(setup.delta));
  std::mt19937_64 rng(setup.sim.seed);
  const int n_fields = cfg.get_int_or("split", "fields", 5);
  json j = provenance(cfg, setup);
  double worst = 0.0;
  for (int t = 0; t < n_fields; ++t) {
    const DistributionVec f =
        random_bump_field(setup.grid, setup.mixture.n_species(), rng);
    const SplitResult sr = split.apply(f, setup.sim.sweep);
    double fs = 0.0;
    for (int s = 0; s < f.n_species(); ++s) fs = std::max(fs, max_abs(f[s]));
    j["residuals"].push_back(sr.max_residual / fs);
    worst = std::max(worst, sr.max_residual / fs);
  }
  j["worst_relative_residual"] = worst;
  write_json(args, "split_check.json", j);
  std::cout << "worst relative splitting residual: " << worst << "\n";
  return 0;
}

int run_majorant_check(const CommonArgs& args) {
  const Config cfg = load_config(args);
  const ProblemSetup setup = build_setup(cfg);
  std::mt19937_64 rng(setup.sim.seed);
  std::uniform_real_distribution<double> uu(0.0, 1.0);
  const int n_pairs = cfg.get_int_or("majorant", "pairs", 20);
  const int n_mc = cfg.get_int_or("majorant", "mc_samples", 100000);
  const double r_max = 12.0;
  auto csv = open_out(args, "majorant.csv");
  csv << "pair,i,j,r,direct_mc,mc_se,majorant,ok\n";
  char buf[200];
  int violations = 0;
  const int n_sp = setup.mixture.n_species();
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < n_pairs; ++t) {
    const auto make_profile = [&] {
      std::vector<double> samples(257, 0.0);
      const int modes = 1 + static_cast<int>(uu(rng) * 3);
      for (int m = 0; m < modes; ++m) {
        const double a = 0.2 + uu(rng), c = 3.0 * uu(rng), s = 0.3 + 1.2 * uu(rng);
        for (int k = 0; k < 257; ++k) {
          const double r = r_max * k / 256.0;
          samples[k] += a * std::exp(-0.5 * (r - c) * (r - c) / (s * s));
        }
      }
      return RadialProfile(samples, r_max);
    };
    const RadialProfile F = make_profile();
    const RadialProfile G = make_profile();
    const int i = static_cast<int>(uu(rng) * n_sp) % n_sp;
    const int j = static_cast<int>(uu(rng) * n_sp) % n_sp;
    for (double r : {0.5, 1.0, 2.0}) {
      const MajorantResult maj = q_plus_radial_majorant(
          setup.kernel, setup.mixture.mass(i), setup.mixture.mass(j), i, j, F, G, r);
      const double mi = setup.mixture.mass(i), mj = setup.mixture.mass(j);
      const Vec3 v{0.0, 0.0, r};
      const double sq = 4.0;
      double sum = 0.0, sum2 = 0.0;
      for (int s = 0; s < n_mc; ++s) {
        const Vec3 vs{sq * gauss(rng), sq * gauss(rng), sq * gauss(rng)};
        Vec3 sig{gauss(rng), gauss(rng), gauss(rng)};
        sig = sig / norm(sig);
        const double q_dens = std::pow(2.0 * kPi * sq * sq, -1.5) *
                              std::exp(-0.5 * norm2(vs) / (sq * sq));
        const PostCollision pc = post_collision(v, vs, sig, mi, mj);
        const double rel = norm(v - vs);
        const double cos_t = rel > 0.0 ? dot(v - vs, sig) / rel : 0.0;
        const double val = setup.kernel.angular(i, j).eval(cos_t) *
                           std::pow(rel, setup.kernel.gamma()) *
                           F.eval(norm(pc.v_prime)) * G.eval(norm(pc.v_star_prime)) /
                           q_dens;
        sum += val;
        sum2 += val * val;
      }
      const double mean = sum / n_mc;
      const double var = std::max(0.0, sum2 / n_mc - mean * mean);
      const double se = 4.0 * kPi * std::sqrt(var / n_mc);
      const double direct = 4.0 * kPi * mean;
      const bool ok = direct <= maj.value + 3.0 * se;
      violations += ok ? 0 : 1;
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%g,%.10g,%.10g,%.10g,%d\n", t, i + 1,
                    j + 1, r, direct, se, maj.value, ok ? 1 : 0);
      csv << buf;
    }
  }
  json j = provenance(cfg, setup);
  j["violations"] = violations;
  j["checks"] = n_pairs * 3;
  write_json(args, "majorant.json", j);
  std::cout << violations << " violations out of " << n_pairs * 3 << " checks\n";
  return violations == 0 ? 0 : 2;
}

int run_afunc(const CommonArgs& args, const std::vector<double>& quad) {
  auto csv = open_out(args, "afunc.csv");
  csv << "a1,a2,a3,a4,value\n";
  char buf[200];
  json rows = json::array();
  const auto emit = [&](double a1, double a2, double a3, double a4) {
    const double val = a_function(a1, a2, a3, a4);
    std::snprintf(buf, sizeof buf, "%g,%g,%g,%g,%.17g\n", a1, a2, a3, a4, val);
    csv << buf;
    rows.push_back({a1, a2, a3, a4, val});
  };
  if (quad.size() == 4) {
    emit(quad[0], quad[1], quad[2], quad[3]);
  } else {
    emit(4.0, 3.0, 2.0, 1.0);
    emit(10.0, 1.0, 1.0, 1.0);
    emit(1.0, 1.0, 1.0, 1.0);
    emit(2.0, 2.0, 1.0, 1.0);
  }
  json j;
  j["tool"] = kVersion;
  j["values"] = rows;
  write_json(args, "afunc.json", j);
  return 0;
}

int run_audit(const CommonArgs& args) {
  const Config cfg = load_config(args);
  const ProblemSetup setup = build_setup(cfg);
  const SphereRule sphere = SphereRule::product_rule(setup.sphere_degree);
  const CollisionOperator op(setup.mixture, setup.kernel, setup.grid, sphere);
  const LinearizedOperator lin(op);
  const int n_samples = cfg.get_int_or("audit", "samples", 20);
  const double beta = cfg.get_double_or("audit", "beta", 2.0);
  std::mt19937_64 rng(setup.sim.seed);
  std::vector<DistributionVec> samples;
  std::vector<std::pair<DistributionVec, DistributionVec>> pairs;
  for (int t = 0; t < n_samples; ++t) {
    samples.push_back(random_bump_field(setup.grid, setup.mixture.n_species(), rng));
    pairs.emplace_back(random_bump_field(setup.grid, setup.mixture.n_species(), rng),
                       random_bump_field(setup.grid, setup.mixture.n_species(), rng));
  }
  json j = provenance(cfg, setup);
  j["audit_samples"] = n_samples;
  const SplitOperator split(lin, Mollifier(setup.delta));
  j["control_B"] = audit_control_B(split, setup.weight, samples);
  const ControlQAudit cq = audit_control_Q(lin, setup.weight, pairs);
  j["control_Q"] = cq.constant;
  j["control_Q_cw"] = cq.c_w;
  j["control_Q_cw_forced_zero"] = cq.cw_forced_zero;
  j["control_A"] = audit_control_A(split, setup.weight, beta, samples);
  j["c_b_weight"] = c_b_weight(setup.mixture, setup.kernel, setup.weight);
  for (double delta : {0.2, 0.1, 0.05}) {
    const SplitOperator sd(lin, Mollifier(delta));
    j["control_B_delta_sweep"].push_back(
        {{"delta", delta}, {"quotient", audit_control_B(sd, setup.weight, samples)}});
  }
  write_json(args, "audit.json", j);
  std::cout << "control_B quotient: " << j["control_B"] << "\n";
  return 0;
}

int run_simulate(const CommonArgs& args) {
  const Config cfg = load_config(args);
  const ProblemSetup setup = build_setup(cfg);
  const SphereRule sphere = SphereRule::product_rule(setup.sphere_degree);
  const CollisionOperator op(setup.mixture, setup.kernel, setup.grid, sphere);

  std::unique_ptr<LinearizedOperator> lin;
  DistributionVec initial(setup.grid, setup.mixture.n_species());
  std::mt19937_64 rng(setup.sim.seed);
  std::unique_ptr<Simulator> sim;
  if (setup.sim.mode == SimMode::Perturbation) {
    lin = std::make_unique<LinearizedOperator>(op);
    sim = std::make_unique<Simulator>(op, lin.get());
    DistributionVec bump = random_bump_field(setup.grid, setup.mixture.n_species(), rng);
    const DistributionVec& mu = lin->mu();
    double mu_max = 0.0;
    for (int s = 0; s < mu.n_species(); ++s) mu_max = std::max(mu_max, max_abs(mu[s]));
    double b_max = 0.0;
    for (int s = 0; s < bump.n_species(); ++s) b_max = std::max(b_max, max_abs(bump[s]));
    for (int s = 0; s < bump.n_species(); ++s)
      for (auto& x : bump[s]) x *= setup.amplitude * mu_max / b_max;
    initial = sim->project_conservation(bump);
  } else {
    sim = std::make_unique<Simulator>(op);
    // bi-Maxwellian with zero total momentum: species 1 drifts along +x
    std::vector<Vec3> drifts(setup.mixture.n_species());
    if (setup.mixture.n_species() > 1) {
      drifts[0] = {setup.drift, 0.0, 0.0};
      double others = 0.0;
      for (int s = 1; s < setup.mixture.n_species(); ++s)
        others += setup.mixture.mass(s) * setup.mixture.density(s);
      const double balance =
          -setup.mixture.mass(0) * setup.mixture.density(0) * setup.drift / others;
      for (int s = 1; s < setup.mixture.n_species(); ++s) drifts[s] = {balance, 0.0, 0.0};
    } else {
      drifts[0] = {setup.drift, 0.0, 0.0};
    }
    initial = shifted_maxwellian(setup.mixture, setup.grid, drifts);
  }

  const RunReport rep = sim->run(setup.sim, initial);
  auto csv = open_out(args, "simulate.csv");
  rep.write_csv(csv);
  json j = provenance(cfg, setup);
  j["completed"] = rep.completed;
  if (!rep.abort_reason.empty()) j["abort_reason"] = rep.abort_reason;
  if (rep.fit) {
    j["lambda"] = rep.fit->lambda;
    j["r_squared"] = rep.fit->r_squared;
  }
  j["fit_skipped"] = rep.fit_skipped;
  j["mass_drift_rate"] = rep.mass_drift_rate;
  j["momentum_drift_rate"] = rep.momentum_drift_rate;
  j["energy_drift_rate"] = rep.energy_drift_rate;
  j["entropy_max_increase"] = rep.entropy_max_increase;
  write_json(args, "simulate.json", j);
  if (!rep.completed) {
    std::cerr << "run aborted: " << rep.abort_reason << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-species Boltzmann toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonArgs args;
  std::vector<double> afunc_args;

  CLI::App* threshold = app.add_subcommand("threshold", "stability threshold constants");
  add_common(threshold, args);
  CLI::App* nu = app.add_subcommand("nu", "collision frequency sweep with bounds");
  add_common(nu, args);
  CLI::App* collide = app.add_subcommand("collide", "collision operator field dump");
  add_common(collide, args);
  CLI::App* split = app.add_subcommand("split-check", "splitting identity residuals");
  add_common(split, args);
  CLI::App* majorant = app.add_subcommand("majorant-check", "radial majorant audit");
  add_common(majorant, args);
  CLI::App* afunc = app.add_subcommand("afunc", "A-function evaluation table");
  add_common(afunc, args);
  afunc->add_option("a", afunc_args, "quadruple a1 a2 a3 a4")->expected(0, 4);
  CLI::App* audit = app.add_subcommand("audit", "empirical operator-norm audits");
  add_common(audit, args);
  CLI::App* simulate = app.add_subcommand("simulate", "time integration run");
  add_common(simulate, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (threshold->parsed()) return run_threshold(args);
    if (nu->parsed()) return run_nu(args);
    if (collide->parsed()) return run_collide(args);
    if (split->parsed()) return run_split_check(args);
    if (majorant->parsed()) return run_majorant_check(args);
    if (afunc->parsed()) return run_afunc(args, afunc_args);
    if (audit->parsed()) return run_audit(args);
    if (simulate->parsed()) return run_simulate(args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
