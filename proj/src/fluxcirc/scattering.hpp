#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluxcirc/errors.hpp"
#include "fluxcirc/sgpde.hpp"

namespace fluxcirc {

using cplx = std::complex<double>;

/// Grid, step and demodulation settings for one S-matrix column.
struct Numerics {
  int nodes = 0;                 // 0: smallest multiple of 3 with 20 nodes per lambda_J
  double dt_factor = 0.25;       // dt = dt_factor * dx
  double transient_periods = 50; // transient >= this many drive periods
  double transient_decay = 20;   // and >= this many 1/Gamma_x
  int demod_periods = 64;        // drive periods per demodulation window
  int max_windows = 8;           // give up after this many windows
  double tolerance = 1e-3;       // max |S| change between consecutive windows
  bool subtract_background = true;
};

/// Default drive: P_in = -120 dBm for the default device.
inline constexpr double kDefaultAmplitude = 3.2e-3;

struct ScatterPoint {
  int drive_port = 0;
  double omega_d = 0.0;
  double amplitude = 0.0;
  double bias = 0.0;
  std::vector<cplx> s;      // S_j,drive for every port j
  double velocity = 0.0;    // initial train velocity
  double v_dc = 0.0;        // dimensionless <phi_t>
  double v_dc_volts = 0.0;
  double p_in = 0.0;        // W
  double p_diss = 0.0;      // W, V_DC^2 / (Z0 / ports)
  // sum_j |S_j|^2 plus the output at omega_d + m * 2 pi n |v| / L, 0 < |m| <= 2
  // (mixing with the fluxon passage rate); 1 for a lossless ring.
  double sideband_norm = 0.0;
  int windows = 0;
  double window_change = 0.0;
  double transient = 0.0;
  double window_length = 0.0;
  bool converged = false;
  std::string error;
};

class ScatterConvergenceError : public ConvergenceError {
 public:
  ScatterConvergenceError(const std::string& what, ScatterPoint point)
      : ConvergenceError(what), point_(std::move(point)) {}
  const ScatterPoint& point() const { return point_; }

 private:
  ScatterPoint point_;
};

/// P_in = |V_in Phi_0 f_p|^2 / Z0 in watts, and its inverse.
double input_power(const JunctionParams& params, double amplitude);
double amplitude_for_power(const JunctionParams& params, double watts);
double watts_to_dbm(double watts);
double dbm_to_watts(double dbm);

/// Blackman-Harris weighted phasor accumulator: (2/sum w) sum w x e^{-i omega t}.
class Demodulator {
 public:
  Demodulator(double omega, double t0, double length, std::size_t channels);
  void add(double t, std::span<const double> x);
  std::vector<cplx> phasors() const;
  bool done(double t) const { return t >= t0_ + length_ - 1e-12; }

 private:
  double omega_, t0_, length_;
  double weight_sum_ = 0.0;
  std::vector<cplx> acc_;
};

/// One S-matrix column from a time-domain run. Throws ScatterConvergenceError
/// (holding the partial point) when consecutive windows disagree.
ScatterPoint s_column(const Ring& ring, double bias, const DriveSpec& drive, const Numerics& numerics = {});

/// Convenience: ring from params + symmetric ports with numerics.nodes.
Ring default_ring(const JunctionParams& params, const Numerics& numerics, double capacitance = 0.0);

/// Runs fn(i) for i in [0, count) on `workers` threads; results keep index order.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);
int default_workers();

/// Per-point failures are kept in the table with converged = false.
struct SweepRequest {
  JunctionParams params;
  double capacitance = 0.0; // > 0: capacitive ports
  Numerics numerics;
  int drive_port = 0;
  int workers = 1;
};

struct SweepPoint {
  double bias;
  double omega_d;
  double amplitude;
};

std::vector<ScatterPoint> sweep(const SweepRequest& request, const std::vector<SweepPoint>& grid);

/// Parallel LC terminating a waveguide, galvanically connected.
cplx lc_reflection_galvanic(double omega, double inductance, double capacitance, double z0);
/// Capacitively coupled LC load; C_C = +inf reduces to the galvanic form.
cplx lc_reflection_capacitive(double omega, double inductance, double capacitance, double coupling_capacitance,
                              double z0);
/// Dispatch on the optional coupling capacitance.
cplx lc_reflection_oracle(double omega, double inductance, double capacitance, std::optional<double> coupling,
                          double z0);

} // namespace fluxcirc
