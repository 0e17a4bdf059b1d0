#include "boltzmix/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace boltzmix {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config line " + std::to_string(lineno) +
                              ": malformed section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key = value");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("config: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_string(buf.str());
}

void Config::set(const std::string& dotted_key, const std::string& value) {
  const std::size_t dot = dotted_key.find('.');
  if (dot == std::string::npos)
    throw ValidationError("config override: expected section.key, got " + dotted_key);
  sections_[lower(trim(dotted_key.substr(0, dot)))]
           [lower(trim(dotted_key.substr(dot + 1)))] = trim(value);
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    throw ValidationError("config: missing [" + section + "] " + key);
  return sections_.at(section).at(key);
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config: [" + section + "] " + key + " is not a number: " + v);
  }
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

int Config::get_int_or(const std::string& section, const std::string& key,
                       int fallback) const {
  if (!has(section, key)) return fallback;
  const double x = get_double(section, key);
  const int i = static_cast<int>(x);
  if (x != i)
    throw ValidationError("config: [" + section + "] " + key + " must be an integer");
  return i;
}

bool Config::get_bool_or(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = lower(get(section, key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config: [" + section + "] " + key + " is not a boolean: " + v);
}

std::vector<double> Config::get_list(const std::string& section,
                                     const std::string& key) const {
  std::istringstream is(get(section, key));
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ValidationError("config: [" + section + "] " + key +
                            " has a non-numeric entry: " + tok);
    }
  }
  if (out.empty())
    throw ValidationError("config: [" + section + "] " + key + " is empty");
  return out;
}

std::map<std::string, std::string> Config::flattened() const {
  std::map<std::string, std::string> flat;
  for (const auto& [sec, kv] : sections_)
    for (const auto& [k, v] : kv) flat[sec + "." + k] = v;
  return flat;
}

namespace {

AngularPart parse_angular(const std::string& text) {
  std::istringstream is(text);
  std::string kind;
  is >> kind;
  kind = lower(kind);
  if (kind == "constant") {
    double b = 1.0;
    is >> b;
    return AngularPart::constant(b);
  }
  if (kind == "sincos") {
    double c = 1.0;
    is >> c;
    return AngularPart::sincos(c);
  }
  if (kind == "tabulated") {
    std::vector<double> samples;
    double x;
    while (is >> x) samples.push_back(x);
    return AngularPart::tabulated(std::move(samples));
  }
  throw ValidationError("config: unknown angular kind: " + kind);
}

}  // namespace

ProblemSetup build_setup(const Config& cfg) {
  const std::vector<double> masses = cfg.get_list("species", "masses");
  const std::vector<double> densities = cfg.get_list("species", "densities");
  Mixture mix(masses, densities);
  const int n = mix.n_species();

  const double gamma = cfg.get_double_or("kernel", "gamma", 1.0);
  std::vector<double> cphi(n * n, 1.0);
  if (cfg.has("kernel", "cphi")) {
    const std::vector<double> vals = cfg.get_list("kernel", "cphi");
    if (static_cast<int>(vals.size()) == 1) {
      std::fill(cphi.begin(), cphi.end(), vals[0]);
    } else if (static_cast<int>(vals.size()) == n * n) {
      cphi = vals;
    } else {
      throw ValidationError("config: cphi needs 1 or N*N values");
    }
  }
  std::vector<AngularPart> angular(
      static_cast<std::size_t>(n) * n,
      parse_angular(cfg.get_or("kernel", "angular", "constant 1")));
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      const std::string key = "angular_" + std::to_string(i) + "_" + std::to_string(j);
      if (cfg.has("kernel", key)) {
        const AngularPart a = parse_angular(cfg.get("kernel", key));
        angular[(i - 1) * n + (j - 1)] = a;
        angular[(j - 1) * n + (i - 1)] = a;
      }
    }
  }
  KernelModel kernel(n, gamma, std::move(cphi), std::move(angular));

  Weight weight = Weight::polynomial(7.0);
  const std::string wkind = lower(cfg.get_or("weight", "kind", "polynomial"));
  if (wkind == "polynomial") {
    weight = Weight::polynomial(cfg.get_double_or("weight", "k", 7.0));
  } else if (wkind == "exponential") {
    weight = Weight::exponential(cfg.get_double_or("weight", "kappa1", 1.0),
                                 cfg.get_double_or("weight", "kappa2", 1.0));
  } else {
    throw ValidationError("config: unknown weight kind: " + wkind);
  }

  const int grid_n = cfg.get_int_or("grid", "n", 24);
  double v_max = VelocityGrid::default_v_max(mix.min_mass());
  if (cfg.has("grid", "v_max")) {
    const std::string v = lower(cfg.get("grid", "v_max"));
    if (v != "auto") v_max = cfg.get_double("grid", "v_max");
  }
  VelocityGrid grid(v_max, grid_n);

  SimConfig sim;
  const std::string mode = lower(cfg.get_or("sim", "mode", "full"));
  if (mode == "full")
    sim.mode = SimMode::FullF;
  else if (mode == "perturbation")
    sim.mode = SimMode::Perturbation;
  else
    throw ValidationError("config: unknown sim mode: " + mode);
  const std::string integ = lower(cfg.get_or("sim", "integrator", "exponential-euler"));
  if (integ == "exponential-euler")
    sim.integrator = Integrator::ExponentialEuler;
  else if (integ == "rk2")
    sim.integrator = Integrator::ExplicitRk2;
  else
    throw ValidationError("config: unknown integrator: " + integ);
  sim.dt = cfg.get_double_or("sim", "dt", 0.1);
  sim.t_end = cfg.get_double_or("sim", "t_end", 1.0);
  sim.cadence = cfg.get_int_or("sim", "cadence", 1);
  sim.seed = static_cast<std::uint64_t>(cfg.get_double_or("sim", "seed", 0.0));
  sim.fit_window = cfg.get_double_or("sim", "fit_window", 0.6);
  sim.correct_moments = cfg.get_bool_or("sim", "correct_moments", false);
  sim.blowup_factor = cfg.get_double_or("sim", "blowup", 10.0);
  sim.norm_weight = weight;
  sim.sweep.node_error_budget = cfg.get_double_or("sim", "node_budget", 0.0);
  sim.sweep.mass_error_budget = cfg.get_double_or("sim", "mass_budget", 0.0);
  sim.sweep.escape_cap = cfg.get_double_or("sim", "escape_cap", 1.0);

  ProblemSetup setup{std::move(mix),
                     std::move(kernel),
                     weight,
                     grid,
                     cfg.get_int_or("sphere", "degree", 17),
                     cfg.get_double_or("mollifier", "delta", 0.1),
                     sim,
                     cfg.get_double_or("sim", "amplitude", 1e-3),
                     cfg.get_double_or("sim", "drift", 0.3)};
  return setup;
}

}  // namespace boltzmix
