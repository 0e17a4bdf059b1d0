// Text configuration files.
//
// Format: INI-style sections of key = value lines; '#' or ';' start a
// comment; lists are whitespace separated. Recognized sections and keys:
//
//   [species]   masses = m1 m2 ...      densities = c1 c2 ...
//   [kernel]    gamma = g
//               cphi = c                (single value for all pairs, or
//                                        N*N row-major values)
//               angular = constant [b] | sincos [c] | tabulated v0 v1 ...
//               angular_<i>_<j> = ...   (per-pair override, 1-based)
//   [weight]    kind = polynomial | exponential
//               k = 7 | kappa1 = 1, kappa2 = 0.5
//   [grid]      n = 24                  v_max = auto | number
//   [sphere]    degree = 17
//   [mollifier] delta = 0.1
//   [sim]       mode = full | perturbation
//               integrator = exponential-euler | rk2
//               dt, t_end, cadence, seed, amplitude, drift, fit_window,
//               correct_moments, node_budget, mass_budget, escape_cap

#pragma once

#include <map>
#include <string>

#include "boltzmix/mollifier.hpp"
#include "boltzmix/simulator.hpp"

namespace boltzmix {

class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  // "section.key=value" overrides, applied after parsing
  void set(const std::string& dotted_key, const std::string& value);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  int get_int_or(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  // echo of every key the config holds, for provenance records
  std::map<std::string, std::string> flattened() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct ProblemSetup {
  Mixture mixture;
  KernelModel kernel;
  Weight weight;
  VelocityGrid grid;
  int sphere_degree = 17;
  double delta = 0.1;
  SimConfig sim;
  double amplitude = 1e-3;  // perturbation initial amplitude
  double drift = 0.3;       // full-F bi-Maxwellian drift speed
};

ProblemSetup build_setup(const Config& cfg);

}  // namespace boltzmix
