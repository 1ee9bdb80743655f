#include "fluxcirc/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fluxcirc/errors.hpp"
#include "fluxcirc/table.hpp"

namespace fluxcirc {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double to_number(const std::string& where, const std::string& text) {
  const std::string s = trim(text);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(where + ": '" + text + "' is not a finite number");
  }
  return v;
}

int to_integer(const std::string& where, const std::string& text) {
  const double v = to_number(where, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(where + ": '" + text + "' is not an integer");
  return static_cast<int>(v);
}

bool to_bool(const std::string& where, const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(where + ": '" + text + "' is not a boolean");
}

// Keys each experiment accepts beyond `name`.
const std::map<std::string, std::set<std::string>> kExperimentKeys = {
    {"iv", {"fluxons", "bias", "pde", "duration"}},
    {"spectrum", {"fluxons", "modes"}},
    {"splitting", {"bias"}},
    {"bias-sweep", {"bias", "omega", "amplitude", "drive_port"}},
    {"freq-sweep", {"bias", "omega", "detuning", "fluxons", "amplitude", "drive_port"}},
    {"loss-g", {"g", "amplitude"}},
    {"loss-p", {"p", "bias", "omega", "amplitude"}},
    {"power", {"power_dbm", "bias", "omega"}},
    {"fluxon-sweep", {"fluxons", "refine", "amplitude"}},
    {"coupling-compare", {"capacitance", "detuning", "amplitude"}},
    {"validate", {}},
};

template <class Fn>
void for_keys(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed, Fn fn) {
  for (const auto& [key, node] : section) {
    if (!node.empty()) throw ConfigError("[" + name + "] " + key + ": nested values are not allowed");
    if (!allowed.count(key)) throw ConfigError("[" + name + "] unknown key '" + key + "'");
    fn(key, node.data(), "[" + name + "] " + key);
  }
}

} // namespace

std::vector<double> parse_grid(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) throw ConfigError("grid: empty");
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(trim(p));
    const bool log = parts.size() == 4 && parts[0] == "log";
    if (parts.size() != 3 && !log) throw ConfigError("grid '" + text + "': expected a:b:count or log:a:b:count");
    const std::size_t o = log ? 1 : 0;
    const double a = to_number("grid", parts[o]), b = to_number("grid", parts[o + 1]);
    const int n = to_integer("grid", parts[o + 2]);
    if (n < 1) throw ConfigError("grid '" + text + "': count must be >= 1");
    if (log && !(a > 0.0 && b > 0.0)) throw ConfigError("grid '" + text + "': log grid needs positive ends");
    for (int i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
      out.push_back(log ? std::exp(std::log(a) + f * (std::log(b) - std::log(a))) : a + f * (b - a));
    }
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(to_number("grid", p));
  }
  if (out.size() > 1) {
    const bool up = out[1] > out[0];
    for (std::size_t i = 1; i < out.size(); ++i) {
      if (up ? !(out[i] > out[i - 1]) : !(out[i] < out[i - 1])) {
        throw ConfigError("grid '" + text + "' is not strictly monotone");
      }
    }
  }
  return out;
}

std::vector<double> ExperimentConfig::grid(const std::string& key) const {
  const auto it = settings.find(key);
  if (it == settings.end()) throw ConfigError("[experiment] " + experiment + " needs '" + key + "'");
  try {
    return parse_grid(it->second);
  } catch (const ConfigError& e) {
    throw ConfigError("[experiment] " + key + ": " + e.what());
  }
}

std::vector<double> ExperimentConfig::grid_or(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? grid(key) : fallback;
}

double ExperimentConfig::number_or(const std::string& key, double fallback) const {
  const auto it = settings.find(key);
  return it == settings.end() ? fallback : to_number("[experiment] " + key, it->second);
}

int ExperimentConfig::integer_or(const std::string& key, int fallback) const {
  const auto it = settings.find(key);
  return it == settings.end() ? fallback : to_integer("[experiment] " + key, it->second);
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  auto num = [&](const std::string& k, double v) { e.emplace_back(k, format_number(v)); };
  num("device.length", device.length);
  num("device.fluxons", device.fluxons);
  num("device.g", device.g);
  num("device.p", device.p);
  num("device.lambda_j", device.lambda_j);
  num("device.plasma_frequency", device.plasma_frequency);
  num("device.z_ljj", device.z_ljj);
  num("device.z0", device.z0);
  num("device.coupling_capacitance", coupling_capacitance);
  num("numerics.nodes", numerics.nodes);
  num("numerics.dt_factor", numerics.dt_factor);
  num("numerics.transient_periods", numerics.transient_periods);
  num("numerics.transient_decay", numerics.transient_decay);
  num("numerics.demod_periods", numerics.demod_periods);
  num("numerics.max_windows", numerics.max_windows);
  num("numerics.tolerance", numerics.tolerance);
  e.emplace_back("numerics.subtract_background", numerics.subtract_background ? "true" : "false");
  e.emplace_back("experiment.name", experiment);
  for (const auto& [k, v] : settings) e.emplace_back("experiment." + k, trim(v));
  num("output.precision", precision);
  return e;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  bool have_experiment = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    if (section == "device") {
      for_keys(body, section,
               {"length", "fluxons", "g", "p", "lambda_j", "plasma_frequency", "z_ljj", "z0", "coupling_capacitance"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "fluxons") {
                   c.device.fluxons = to_integer(where, v);
                   return;
                 }
                 const double x = to_number(where, v);
                 if (k == "length") c.device.length = x;
                 if (k == "g") c.device.g = x;
                 if (k == "p") c.device.p = x;
                 if (k == "lambda_j") c.device.lambda_j = x;
                 if (k == "plasma_frequency") c.device.plasma_frequency = x;
                 if (k == "z_ljj") c.device.z_ljj = x;
                 if (k == "z0") c.device.z0 = x;
                 if (k == "coupling_capacitance") c.coupling_capacitance = x;
               });
    } else if (section == "numerics") {
      for_keys(body, section,
               {"nodes", "dt_factor", "transient_periods", "transient_decay", "demod_periods", "max_windows",
                "tolerance", "workers", "subtract_background"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "nodes") c.numerics.nodes = to_integer(where, v);
                 if (k == "dt_factor") c.numerics.dt_factor = to_number(where, v);
                 if (k == "transient_periods") c.numerics.transient_periods = to_number(where, v);
                 if (k == "transient_decay") c.numerics.transient_decay = to_number(where, v);
                 if (k == "demod_periods") c.numerics.demod_periods = to_integer(where, v);
                 if (k == "max_windows") c.numerics.max_windows = to_integer(where, v);
                 if (k == "tolerance") c.numerics.tolerance = to_number(where, v);
                 if (k == "workers") c.workers = to_integer(where, v);
                 if (k == "subtract_background") c.numerics.subtract_background = to_bool(where, v);
               });
    } else if (section == "experiment") {
      const auto name = body.get_optional<std::string>("name");
      if (!name) throw ConfigError("[experiment] missing 'name'");
      c.experiment = trim(*name);
      const auto keys = kExperimentKeys.find(c.experiment);
      if (keys == kExperimentKeys.end()) throw ConfigError("[experiment] unknown experiment '" + c.experiment + "'");
      auto allowed = keys->second;
      allowed.insert("name");
      for_keys(body, section, allowed, [&](const std::string& k, const std::string& v, const std::string&) {
        if (k != "name") c.settings[k] = v;
      });
      have_experiment = true;
    } else if (section == "output") {
      for_keys(body, section, {"directory", "precision"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "directory") c.out_dir = trim(v);
                 if (k == "precision") c.precision = to_integer(where, v);
               });
    } else {
      throw ConfigError("config: unknown section [" + section + "]");
    }
  }
  if (!have_experiment) throw ConfigError("config: missing [experiment] section");

  try {
    c.device.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[device] ") + e.what());
  }
  if (c.coupling_capacitance < 0.0) throw ConfigError("[device] coupling_capacitance must be >= 0");
  const auto& n = c.numerics;
  if (n.nodes < 0) throw ConfigError("[numerics] nodes must be >= 0");
  if (!(n.dt_factor > 0.0 && n.dt_factor <= 0.5)) throw ConfigError("[numerics] dt_factor must be in (0, 0.5]");
  if (n.transient_periods < 0.0 || n.transient_decay < 0.0) throw ConfigError("[numerics] negative transient");
  if (n.demod_periods < 1) throw ConfigError("[numerics] demod_periods must be >= 1");
  if (n.max_windows < 2) throw ConfigError("[numerics] max_windows must be >= 2");
  if (!(n.tolerance > 0.0)) throw ConfigError("[numerics] tolerance must be positive");
  if (c.workers < 0) throw ConfigError("[numerics] workers must be >= 0");
  if (c.precision < 1 || c.precision > 17) throw ConfigError("[output] precision must be in 1..17");
  // Parse every grid now so bad text fails before any computation.
  for (const auto& [k, v] : c.settings) {
    if (k == "pde") {
      to_bool("[experiment] pde", v);
    } else if (k == "drive_port" || k == "refine" || k == "modes") {
      const int i = to_integer("[experiment] " + k, v);
      if (i < 0 || (k == "drive_port" && i > 2) || (k == "modes" && i < 1)) {
        throw ConfigError("[experiment] " + k + " out of range");
      }
    } else {
      const auto g = c.grid(k);
      const bool positive = k == "omega" || k == "amplitude" || k == "duration" || k == "fluxons";
      const bool non_negative = k == "g" || k == "p" || k == "capacitance";
      for (double x : g) {
        if ((positive && !(x > 0.0)) || (non_negative && x < 0.0)) {
          throw ConfigError("[experiment] " + k + ": value " + format_number(x) + " out of range");
        }
        if (k == "fluxons" && x != std::floor(x)) throw ConfigError("[experiment] fluxons must be integers");
      }
      if ((k == "omega" || k == "amplitude" || k == "duration") && c.experiment != "freq-sweep" && g.size() != 1) {
        throw ConfigError("[experiment] " + k + " takes a single value here");
      }
    }
  }
  if (c.experiment == "freq-sweep" && c.has("omega") && c.has("detuning")) {
    throw ConfigError("[experiment] freq-sweep takes 'omega' or 'detuning', not both");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

} // namespace fluxcirc
