#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fluxcirc/config.hpp"
#include "fluxcirc/scattering.hpp"
#include "fluxcirc/table.hpp"
#include "fluxcirc/tcm.hpp"

namespace fluxcirc {

using LogFn = std::function<void(const std::string&)>;

/// omega_1 of the static train of params (dimensionless).
double resonance_omega(const JunctionParams& params);

/// PDE-measured dimensionless V_DC of a port-free ring at bias i_b.
struct DcMeasurement {
  double voltage = 0.0;
  double drift = 0.0; // relative change between the window halves
};
DcMeasurement pde_dc_voltage(const JunctionParams& params, double bias, int nodes = 0, double transient = 0.0,
                             double window = 400.0);

/// Bias and drive where the loaded splitting equals the TCM optimum
/// 2 (gamma_x + gamma_i) / sqrt 3; omega_d is the mean mode frequency.
struct DesignPoint {
  double bias = 0.0;
  double omega_d = 0.0;
  TcmParams tcm;
};
DesignPoint design_point(const Ring& ring);

/// Half-maximum width of y(x) by linear interpolation around the peak; NaN
/// when either side never drops below half.
double fwhm(const std::vector<double>& x, const std::vector<double>& y);

/// First crossing of y(x) below `level`, by linear interpolation; NaN if none.
double first_crossing_below(const std::vector<double>& x, const std::vector<double>& y, double level);

/// Orientation (+1/-1) from the point with the largest |S21| - |S31| contrast.
int orientation_from(const std::vector<ScatterPoint>& pde, const std::vector<TcmParams>& tcm);

/// Shared column layout for S-parameter tables.
std::vector<std::string> scatter_columns(int drive_port);
std::vector<Cell> scatter_cells(const ScatterPoint& pt, const JunctionParams& params, const SMatrix* tcm);

struct ExperimentOutput {
  std::vector<ResultTable> tables;
  int failed_points = 0;           // unconverged or errored scatter points
  std::vector<std::string> report; // human-readable lines (validate prints these)
  bool checks_passed = true;       // validate only
};

/// Runs the experiment named in config. Per-point numerical failures stay in
/// the tables; configuration problems raise ConfigError.
ExperimentOutput run_experiment(const ExperimentConfig& config, int workers, const LogFn& log = {});

/// Quick invariant suite behind `validate`.
ExperimentOutput run_validation(const LogFn& log = {});

} // namespace fluxcirc
