#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fluxcirc/constants.hpp"

namespace fluxcirc {

/// Device constants. Lengths are in units of lambda_J and times in units of
/// 1/omega_p unless a field says otherwise.
struct JunctionParams {
  double length = 26.0; // ring perimeter L / lambda_J
  int fluxons = 8;      // trapped fluxon number n
  double g = 0.0;       // quasiparticle loss
  double p = 0.0;       // surface loss
  double lambda_j = 37.9e-6;       // m
  double plasma_frequency = 33.5e9; // f_p = omega_p / 2pi, Hz
  double z_ljj = 1.82;             // ohm
  double z0 = 50.0;                // ohm

  /// Port coupling strength Z_LJJ / Z0.
  double z() const { return z_ljj / z0; }
  double omega_p() const { return 2.0 * pi * plasma_frequency; }
  /// Swihart velocity lambda_J * omega_p in m/s.
  double swihart() const { return lambda_j * omega_p(); }
  /// Volts per unit of dimensionless voltage phi_t.
  double voltage_unit() const { return flux_quantum * plasma_frequency; }

  /// Throws DomainError unless every field is in range.
  void validate() const;
};

/// Steady fluxon train: Jacobi modulus, velocity (units of c_S), Lorentz
/// factor and the bias that sustains it.
struct TrainState {
  double k = 0.0;
  double v = 0.0;
  double gamma = 1.0;
  double bias = 0.0;
};

double lorentz_factor(double v);

/// Root of 2 k K(k) / gamma_v = L / n.
double solve_modulus(double length, int fluxons, double v);

/// Force balance i_b = -4 gamma v g E(k) / (pi k).
double bias_for_velocity(double v, double k, double g);

/// Train (k, v) that balances bias i_b against damping g.
TrainState velocity_for_bias(double bias, double length, int fluxons, double g);

/// Train moving at velocity v, with the bias that damping g requires.
TrainState train_at_velocity(double v, double length, int fluxons, double g);

/// phi_0(x, t) = pi + 2 am(gamma (x - v t) / k, k).
double fluxon_profile(double x, double t, const TrainState& train);

struct ProfileDerivatives {
  double phi;
  double phi_x;
  double phi_t;
};
ProfileDerivatives fluxon_profile_derivatives(double x, double t, const TrainState& train);

/// Time-averaged voltage 2 pi n v / L (dimensionless).
double dc_voltage(double length, int fluxons, const TrainState& train);

/// Equivalent form -pi^2 i_b / (4 g E(k) K(k)).
double dc_voltage_from_bias(double bias, double g, double k);

struct IvPoint {
  double bias = 0.0;
  double voltage = 0.0;  // dimensionless V_DC
  double velocity = 0.0;
  double modulus = 0.0;
  bool valid = true;     // false past the v -> 1 branch
};

/// Analytic flux-flow I-V curve; n = 0 gives the pinned zero-voltage branch.
std::vector<IvPoint> iv_curve(const JunctionParams& params, std::span<const double> bias_grid);

} // namespace fluxcirc
