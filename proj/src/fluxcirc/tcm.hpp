#pragma once

#include <array>
#include <complex>
#include <vector>

#include "fluxcirc/scattering.hpp"

namespace fluxcirc {

/// Two counter-rotating ring modes coupled equally to three ports.
struct TcmParams {
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double gamma_x = 0.0;     // external rate, per mode
  double gamma_i = 0.0;     // internal loss rate
  double gamma_sigma = 0.0; // gamma_x + gamma_i

  void validate() const;
};

TcmParams make_tcm(double omega_plus, double omega_minus, double gamma_x, double gamma_i);

using SMatrix = std::array<std::array<cplx, 3>, 3>;

/// Forward amplitude -(2/3) sum_s gamma_x e^{s i pi/3} / (gamma_sigma + i(omega_d - omega_s)).
cplx s21(double omega_d, const TcmParams& p);
cplx s31(double omega_d, const TcmParams& p);
cplx s11(double omega_d, const TcmParams& p);
/// Circulant: S[j][k] depends only on (j - k) mod 3.
SMatrix s_matrix(double omega_d, const TcmParams& p);

struct TcmDesign {
  double delta_omega = 0.0; // optimal omega_plus - omega_minus
  double bandwidth = 0.0;   // dimensionless FWHM of |S21|
};
TcmDesign design(double gamma_x, double gamma_i);

/// Rates of a ring: gamma_x = sum(port strength) / (2L), gamma_i = g / 2.
double external_rate(const Ring& ring);
/// Same at drive frequency omega: a capacitive port damps by z omega^2 / (omega^2 + p_C^2).
double external_rate(const Ring& ring, double omega);
double internal_rate(const JunctionParams& params);
/// Mode shift from the reactive part z p_C omega^2 / (omega^2 + p_C^2) of
/// capacitive ports: -sum / (2 omega L). Zero for galvanic ports.
double port_frequency_shift(const Ring& ring, double omega);

/// TCM parameters at a bias, from the loaded train's lab-frame splitting.
/// orientation = +1 keeps omega_plus = omega_{n-1}; -1 swaps the pair.
/// gamma_x and the port shift are taken at the mean mode frequency.
TcmParams tcm_for_ring(const Ring& ring, double bias, int orientation = 1);

struct TcmResidual {
  double d11 = 0.0, d21 = 0.0, d31 = 0.0; // ||S_tcm| - |S_pde||
};

struct TcmReport {
  std::vector<TcmResidual> points;
  double max_dev = 0.0;  // over all entries and points
  double mean_dev = 0.0;
  std::size_t compared = 0; // converged PDE points used
};

/// Per-point magnitude residuals. Unconverged PDE points are skipped.
/// Throws DomainError when the two grids differ in length.
TcmReport compare_to_pde(const std::vector<ScatterPoint>& pde, const std::vector<TcmParams>& tcm);

/// Sign (+1 or -1) of the mode ordering that best matches a PDE column.
int calibrate_orientation(const ScatterPoint& pde, const TcmParams& p);

} // namespace fluxcirc
