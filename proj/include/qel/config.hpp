#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "qel/error.hpp"
#include "qel/evolution.hpp"
#include "qel/grid.hpp"
#include "qel/initial_data.hpp"

namespace qel {

struct GridSpec {
  double r_min = 0.4, r_max = 1.6, z_min = -0.6, z_max = 0.6;
  int n_r = 257, n_z = 257;

  GridPtr make() const { return make_grid(r_min, r_max, z_min, z_max, n_r, n_z); }
};

struct OdeSpec {
  double c = 1.0, kappa = 1.0, Q0 = 1.0, C0 = 1.0, T_max = 100.0;
};

struct RunConfig {
  DataParameters data;
  GridSpec grid;
  double dt = 0.005;
  double t_final = 1.0;
  double record_interval = 0.1;
  double recovery_tol = 1e-10;
  double quad_tol = 1e-12;
  double E_cap = 0.5;
  double delta_c = 0.05;
  double exterior_radius = 0.25;
  bool exterior = true;
  std::string output_dir = "qel-out";
  std::uint64_t seed = 20240601;
  OdeSpec ode;

  RunOptions run_options() const {
    RunOptions o;
    o.t_final = t_final;
    o.dt_max = dt;
    o.record_interval = record_interval;
    o.E_cap = E_cap;
    o.diag = diagnostics_options();
    return o;
  }

  DiagnosticsOptions diagnostics_options() const {
    DiagnosticsOptions d;
    d.delta_c = delta_c;
    d.R0 = exterior_radius;
    d.recovery_tol = recovery_tol;
    d.exterior = exterior;
    return d;
  }
};

/// One configurable key: "section.name" in files, --flag on the command line.
struct ConfigKey {
  std::string path;
  std::string flag;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

namespace detail {

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw FormatError("bad boolean for " + key + ": '" + text + "'");
  } else {
    is >> v;
    if (!is || !(is >> std::ws).eof()) throw FormatError("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << v;
    return os.str();
  }
}

inline std::string kebab(const std::string& name) {
  std::string out;
  for (char ch : name) {
    if (ch == '_') out += '-';
    else out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

template <class T, class Access>
ConfigKey make_key(const std::string& section, const std::string& name, const std::string& help, Access acc,
                   const std::string& flag_prefix = "") {
  ConfigKey k;
  k.path = section + "." + name;
  k.flag = "--" + flag_prefix + kebab(name);
  k.help = help;
  k.get = [acc](const RunConfig& c) { return format_value<T>(acc(const_cast<RunConfig&>(c))); };
  k.set = [acc, path = k.path](RunConfig& c, const std::string& text) {
    if constexpr (std::is_same_v<T, std::string>) acc(c) = text;
    else acc(c) = parse_value<T>(path, text);
  };
  return k;
}

}  // namespace detail

/// Every key of RunConfig, in manifest order.
inline const std::vector<ConfigKey>& config_keys() {
  using detail::make_key;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back(make_key<double>("data", "r0", "packet center radius", [](RunConfig& c) -> double& { return c.data.r0; }));
    k.push_back(make_key<double>("data", "lambda0", "packet scale", [](RunConfig& c) -> double& { return c.data.lambda0; }));
    k.push_back(make_key<double>("data", "a0", "quadrupole amplitude", [](RunConfig& c) -> double& { return c.data.a0; }));
    k.push_back(make_key<double>("data", "Gamma_star0", "core swirl", [](RunConfig& c) -> double& { return c.data.Gamma_star0; }));
    k.push_back(make_key<double>("data", "A_b", "jet amplitude factor", [](RunConfig& c) -> double& { return c.data.A_b; }));
    k.push_back(make_key<double>("data", "epsilon0", "smallness parameter", [](RunConfig& c) -> double& { return c.data.epsilon0; }));
    k.push_back(make_key<double>("data", "kappa", "source dominance constant", [](RunConfig& c) -> double& { return c.data.kappa; }));
    k.push_back(make_key<double>("grid", "r_min", "grid inner radius", [](RunConfig& c) -> double& { return c.grid.r_min; }));
    k.push_back(make_key<double>("grid", "r_max", "grid outer radius", [](RunConfig& c) -> double& { return c.grid.r_max; }));
    k.push_back(make_key<double>("grid", "z_min", "grid lower edge", [](RunConfig& c) -> double& { return c.grid.z_min; }));
    k.push_back(make_key<double>("grid", "z_max", "grid upper edge", [](RunConfig& c) -> double& { return c.grid.z_max; }));
    k.push_back(make_key<int>("grid", "n_r", "radial nodes", [](RunConfig& c) -> int& { return c.grid.n_r; }));
    k.push_back(make_key<int>("grid", "n_z", "axial nodes", [](RunConfig& c) -> int& { return c.grid.n_z; }));
    k.push_back(make_key<double>("time", "dt", "largest time step", [](RunConfig& c) -> double& { return c.dt; }));
    k.push_back(make_key<double>("time", "t_final", "final time", [](RunConfig& c) -> double& { return c.t_final; }));
    k.push_back(make_key<double>("time", "record_interval", "time between records", [](RunConfig& c) -> double& { return c.record_interval; }));
    k.push_back(make_key<double>("tolerance", "recovery_tol", "elliptic residual tolerance", [](RunConfig& c) -> double& { return c.recovery_tol; }));
    k.push_back(make_key<double>("tolerance", "quad_tol", "quadrature tolerance", [](RunConfig& c) -> double& { return c.quad_tol; }));
    k.push_back(make_key<double>("tolerance", "E_cap", "halt when E exceeds this", [](RunConfig& c) -> double& { return c.E_cap; }));
    k.push_back(make_key<double>("diagnostics", "delta_c", "diagonal sector half-width", [](RunConfig& c) -> double& { return c.delta_c; }));
    k.push_back(make_key<double>("diagnostics", "exterior_radius", "near/far split radius R0", [](RunConfig& c) -> double& { return c.exterior_radius; }));
    k.push_back(make_key<bool>("diagnostics", "exterior", "compute eta_ext", [](RunConfig& c) -> bool& { return c.exterior; }));
    k.push_back(make_key<std::string>("output", "output_dir", "output directory", [](RunConfig& c) -> std::string& { return c.output_dir; }));
    k.push_back(make_key<std::uint64_t>("random", "seed", "Monte Carlo seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));
    k.push_back(make_key<double>("ode", "c", "comparison rate constant", [](RunConfig& c) -> double& { return c.ode.c; }, "ode-"));
    k.push_back(make_key<double>("ode", "kappa", "comparison dominance constant", [](RunConfig& c) -> double& { return c.ode.kappa; }, "ode-"));
    k.push_back(make_key<double>("ode", "Q0", "comparison initial score", [](RunConfig& c) -> double& { return c.ode.Q0; }, "ode-"));
    k.push_back(make_key<double>("ode", "C0", "comparison initial source", [](RunConfig& c) -> double& { return c.ode.C0; }, "ode-"));
    k.push_back(make_key<double>("ode", "T_max", "comparison horizon", [](RunConfig& c) -> double& { return c.ode.T_max; }, "ode-"));
    return k;
  }();
  return keys;
}

inline const ConfigKey& config_key(const std::string& path) {
  for (const auto& k : config_keys())
    if (k.path == path) return k;
  throw FormatError("unknown configuration key: " + path);
}

/// Applies "section.key = value" pairs from an INI file; unknown keys are errors.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError("cannot read config " + path + ": " + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw FormatError("config key outside a section: " + section);
    for (const auto& [name, value] : body) config_key(section + "." + name).set(cfg, value.data());
  }
}

/// QEL_OUTPUT_DIR, when set and nonempty, replaces the output directory.
inline void apply_environment(RunConfig& cfg) {
  if (const char* env = std::getenv("QEL_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
}

/// Resolved configuration as INI text, one section per group.
inline std::string config_to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& k : config_keys()) {
    const auto dot = k.path.find('.');
    const std::string s = k.path.substr(0, dot);
    if (s != section) {
      if (!section.empty()) os << '\n';
      os << '[' << s << "]\n";
      section = s;
    }
    os << k.path.substr(dot + 1) << " = " << k.get(cfg) << '\n';
  }
  return os.str();
}

}  // namespace qel
