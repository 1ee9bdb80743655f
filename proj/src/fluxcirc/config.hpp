#pragma once

#include <map>
#include <string>
#include <vector>

#include "fluxcirc/fluxon.hpp"
#include "fluxcirc/scattering.hpp"

namespace fluxcirc {

inline const std::vector<std::string> kExperimentNames = {
    "iv",     "spectrum", "splitting",    "bias-sweep",       "freq-sweep", "loss-g",
    "loss-p", "power",    "fluxon-sweep", "coupling-compare", "validate"};

/// Grid text: "a:b:count" (inclusive, linear), "log:a:b:count", or "v1,v2,...".
std::vector<double> parse_grid(const std::string& text);

struct ExperimentConfig {
  JunctionParams device;
  double coupling_capacitance = 0.0; // F; 0 = galvanic ports
  Numerics numerics;
  int workers = 0; // 0 = available parallelism

  std::string experiment;
  std::map<std::string, std::string> settings; // experiment block, raw text

  std::string out_dir; // empty: caller decides
  int precision = 17;

  bool has(const std::string& key) const { return settings.count(key) > 0; }
  std::vector<double> grid(const std::string& key) const;
  std::vector<double> grid_or(const std::string& key, std::vector<double> fallback) const;
  double number_or(const std::string& key, double fallback) const;
  int integer_or(const std::string& key, int fallback) const;

  /// Flat `section.key = value` lines, enough to rebuild this config.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// INI text with [device], [numerics], [experiment], [output]. Unknown
/// sections or keys, bad numbers and bad grids raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

} // namespace fluxcirc
