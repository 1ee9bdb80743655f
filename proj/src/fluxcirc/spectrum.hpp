#pragma once

#include <complex>
#include <vector>

#include "fluxcirc/fluxon.hpp"

namespace fluxcirc {

enum class Band { fluxon, plasma };

/// One Bloch mode of the linearised train.
///
/// beta = re + i*eta with eta signed so that the quantisation condition holds
/// literally for every l; |eta| <= K(k').
struct ModeSolution {
  int ell = 0;
  std::complex<double> beta;
  double omega = 0.0;      // frequency solving the quantisation condition
  double omega_lab = 0.0;  // frequency seen at a fixed point of the ring
  double q = 0.0;          // lab wavenumber, -2 pi l / L
  double q_comoving = 0.0; // Bloch wavenumber -(Z/(ik) + pi/(2kK)) in the train frame
  Band band = Band::fluxon;
  double residual = 0.0;   // |quantisation residual|
};

/// Static train: Z(beta) = i (2l - n) pi / (2 n K), omega = dn(beta)/k.
ModeSolution mode_frequency_static(int ell, int fluxons, double k);

/// Moving train: Z(beta) + i omega v k = i (2l - n) pi / (2 n K).
///
/// omega is the frequency in the frame of the train. omega_lab applies the
/// boost back to the ring frame for the dominant spatial harmonic,
/// omega / gamma + 2 pi l_r v / L with l_r = l folded into (-n/2, n/2),
/// and l_r = 0 for the zone-edge mode 2l = n.
ModeSolution mode_frequency_moving(int ell, int fluxons, const TrainState& train);

/// Plasma-band mode (re beta = 0) for integer l.
ModeSolution mode_frequency_plasma(int ell, int fluxons, double k);

/// Band containing omega for modulus k; throws inside the gap.
Band classify_band(double omega, double k);

struct Splitting {
  double omega_minus = 0.0; // omega_1
  double omega_plus = 0.0;  // omega_{n-1}
  double delta = 0.0;       // omega_plus - omega_minus
  TrainState train;
};

/// Lab-frame splitting of the l = 1 and l = n-1 modes.
Splitting splitting(const JunctionParams& params, const TrainState& train);
/// Same, with the train set by bias against damping params.g.
Splitting splitting(const JunctionParams& params, double bias);

/// psi(x) = exp(i q x) u(x) for the upper-sign Lame solution of mode.
std::complex<double> bloch_mode_profile(double x, const ModeSolution& mode, double k);

/// Lowest `count` eigenvalues (omega^2) of -d_xx + cos(phi_0(x)) discretised
/// with N periodic nodes on the static ring; banded symmetric eigen-solve.
std::vector<double> lame_matrix_eigenvalues(double k, double length, int fluxons, int nodes,
                                            int count);

/// Same as frequencies, sign(w2) * sqrt(|w2|), sorted ascending.
std::vector<double> lame_matrix_oracle(double k, double length, int fluxons, int nodes,
                                       int count);

} // namespace fluxcirc
