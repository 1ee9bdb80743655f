#include "fluxcirc/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <lapacke.h>

#include "fluxcirc/elliptic.hpp"
#include "fluxcirc/errors.hpp"

namespace fluxcirc {
namespace {

using elliptic::Modulus;
using cplx = std::complex<double>;

constexpr int kRootScan = 64;

// dn(K + i eta, k) = k' cn(eta, k') / dn(eta, k'), real on the fluxon line.
double dn_fluxon_line(double eta, const Modulus& m) {
  const auto f = elliptic::jacobi(eta, m.kc);
  return m.kc * f.cn / f.dn;
}

// dn(i eta, k) = dn(eta, k') / cn(eta, k'), real on the plasma line.
double dn_plasma_line(double eta, const Modulus& m) {
  const auto f = elliptic::jacobi(eta, m.kc);
  return f.dn / f.cn;
}

double quantum(int ell, int fluxons, const Modulus& m) {
  return (2.0 * ell - fluxons) * pi / (2.0 * fluxons * m.K);
}

void check_mode_args(int ell, int fluxons, double k) {
  if (fluxons < 1) throw DomainError("mode frequency: needs n >= 1");
  if (!(k > 0.0 && k < 1.0)) throw DomainError("mode frequency: k must lie in (0, 1)");
  if (ell < 0 || ell > fluxons) {
    throw DomainError("mode index l = " + std::to_string(ell) +
                      " outside the fluxon band, which admits l in {0..n}");
  }
}

template <class F>
double bracketed_root(F f, double lo, double hi, const char* what) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw ConvergenceError(std::string(what) + ": residual does not change sign on [" +
                           std::to_string(lo) + ", " + std::to_string(hi) + "], f = " +
                           std::to_string(flo) + ", " + std::to_string(fhi));
  }
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
  if (iters >= 200) {
    throw ConvergenceError(std::string(what) + ": no convergence; last bracket [" +
                           std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return 0.5 * (a + b);
}

// The zone-edge mode l = n/2 carries the harmonics +n/2 and -n/2 with equal
// weight, so it takes no Doppler shift.
int folded_index(int ell, int fluxons) {
  if (2 * ell == fluxons) return 0;
  return 2 * ell < fluxons ? ell : ell - fluxons;
}

} // namespace

ModeSolution mode_frequency_static(int ell, int fluxons, double k) {
  check_mode_args(ell, fluxons, k);
  const Modulus m(k);
  const double target = quantum(ell, fluxons, m);

  // im Z(K + i eta) falls monotonically from pi/(2K) to -pi/(2K) on [-K', K'].
  auto residual = [&](double eta) { return jacobi_zeta(cplx(m.K, eta), m).imag() - target; };
  double eta;
  if (ell == 0) {
    eta = m.Kc;
  } else if (ell == fluxons) {
    eta = -m.Kc;
  } else if (2 * ell == fluxons) {
    eta = 0.0;
  } else {
    eta = bracketed_root(residual, -m.Kc, m.Kc, "mode_frequency_static");
  }

  ModeSolution s;
  s.ell = ell;
  s.beta = cplx(m.K, eta);
  s.omega = std::max(dn_fluxon_line(eta, m), 0.0) / k;
  s.omega_lab = s.omega;
  s.q_comoving = -(target / k + pi / (2.0 * k * m.K));
  s.q = s.q_comoving;
  s.band = Band::fluxon;
  s.residual = std::abs(residual(eta));
  return s;
}

ModeSolution mode_frequency_moving(int ell, int fluxons, const TrainState& train) {
  if (!(std::abs(train.v) < 1.0)) throw DomainError("mode_frequency_moving: needs |v| < 1");
  if (train.v == 0.0) return mode_frequency_static(ell, fluxons, train.k);
  check_mode_args(ell, fluxons, train.k);
  const Modulus m(train.k);
  const double k = train.k;
  const double v = train.v;
  const double target = quantum(ell, fluxons, m);

  auto omega_at = [&](double eta) { return std::max(dn_fluxon_line(eta, m), 0.0) / k; };
  auto residual = [&](double eta) {
    return jacobi_zeta(cplx(m.K, eta), m).imag() + omega_at(eta) * v * k - target;
  };

  double eta;
  if (ell == 0) {
    eta = m.Kc;
  } else if (ell == fluxons) {
    eta = -m.Kc;
  } else {
    // The velocity term can bend the residual; scan for the sign change
    // nearest the static root, then refine inside that cell.
    const double eta_static = mode_frequency_static(ell, fluxons, k).beta.imag();
    double best_lo = -m.Kc, best_hi = m.Kc;
    double best_dist = 1e300;
    double prev_x = -m.Kc;
    double prev_f = residual(prev_x);
    for (int i = 1; i <= kRootScan; ++i) {
      const double x = -m.Kc + 2.0 * m.Kc * i / kRootScan;
      const double fx = residual(x);
      if ((prev_f > 0.0) != (fx > 0.0) || fx == 0.0) {
        const double d = std::abs(0.5 * (prev_x + x) - eta_static);
        if (d < best_dist) {
          best_dist = d;
          best_lo = prev_x;
          best_hi = x;
        }
      }
      prev_x = x;
      prev_f = fx;
    }
    eta = bracketed_root(residual, best_lo, best_hi, "mode_frequency_moving");
  }

  const double length = 2.0 * fluxons * k * m.K / train.gamma;
  ModeSolution s;
  s.ell = ell;
  s.beta = cplx(m.K, eta);
  s.omega = omega_at(eta);
  s.omega_lab = s.omega / train.gamma + 2.0 * pi * folded_index(ell, fluxons) * v / length;
  const double zeta = jacobi_zeta(s.beta, m).imag();
  s.q_comoving = -(zeta / k + pi / (2.0 * k * m.K));
  s.q = train.gamma * (s.q_comoving - v * s.omega);
  s.band = Band::fluxon;
  s.residual = std::abs(residual(eta));
  return s;
}

ModeSolution mode_frequency_plasma(int ell, int fluxons, double k) {
  if (fluxons < 1) throw DomainError("mode_frequency_plasma: needs n >= 1");
  if (!(k > 0.0 && k < 1.0)) throw DomainError("mode_frequency_plasma: k must lie in (0, 1)");
  const Modulus m(k);
  const double target = quantum(ell, fluxons, m);
  // im Z(i eta) rises from -inf to +inf on (-K', K'); Theta vanishes at i K'.
  auto residual = [&](double eta) { return jacobi_zeta(cplx(0.0, eta), m).imag() - target; };
  double edge = m.Kc * (1.0 - 1e-3);
  for (int i = 0; i < 40 && (residual(edge) < 0.0 || residual(-edge) > 0.0); ++i) {
    edge = m.Kc - 0.5 * (m.Kc - edge);
  }
  const double eta = bracketed_root(residual, -edge, edge, "mode_frequency_plasma");
  ModeSolution s;
  s.ell = ell;
  s.beta = cplx(0.0, eta);
  s.omega = dn_plasma_line(eta, m) / k;
  s.omega_lab = s.omega;
  s.q_comoving = -(target / k + pi / (2.0 * k * m.K));
  s.q = s.q_comoving;
  s.band = Band::plasma;
  s.residual = std::abs(residual(eta));
  return s;
}

Band classify_band(double omega, double k) {
  const double w2 = omega * omega;
  const double top = 1.0 / (k * k) - 1.0;
  if (w2 <= top + 1e-9) return Band::fluxon;
  if (w2 >= 1.0 / (k * k) - 1e-9) return Band::plasma;
  throw DomainError("classify_band: omega = " + std::to_string(omega) + " lies in the gap");
}

Splitting splitting(const JunctionParams& params, const TrainState& train) {
  if (params.fluxons < 2) throw DomainError("splitting: needs n >= 2");
  Splitting s;
  s.train = train;
  s.omega_minus = mode_frequency_moving(1, params.fluxons, train).omega_lab;
  s.omega_plus = mode_frequency_moving(params.fluxons - 1, params.fluxons, train).omega_lab;
  s.delta = s.omega_plus - s.omega_minus;
  return s;
}

Splitting splitting(const JunctionParams& params, double bias) {
  params.validate();
  return splitting(params, velocity_for_bias(bias, params.length, params.fluxons, params.g));
}

std::complex<double> bloch_mode_profile(double x, const ModeSolution& mode, double k) {
  const Modulus m(k);
  const double s = x / k;
  const auto base = elliptic::theta_eta(cplx(s, 0.0), m);
  if (std::abs(base.theta) < 1e-12) throw DomainError("bloch_mode_profile: Theta(x/k) vanishes");
  const auto shifted = elliptic::theta_eta(cplx(s, 0.0) + mode.beta, m);
  const cplx zeta = elliptic::jacobi_zeta(mode.beta, m);
  // exp(i q x) u(x) with u = exp(i pi x/(2kK)) H(x/k + beta)/Theta(x/k)
  // collapses to exp(-x Z(beta)/k) H(x/k + beta)/Theta(x/k).
  return std::exp(-s * zeta) * shifted.eta / base.theta;
}

std::vector<double> lame_matrix_eigenvalues(double k, double length, int fluxons, int nodes,
                                            int count) {
  if (nodes < 4 || nodes % 2 != 0) throw DomainError("lame_matrix_oracle: needs an even N >= 4");
  if (count < 1 || count > nodes) throw DomainError("lame_matrix_oracle: bad eigenvalue count");
  if (fluxons < 1 || std::abs(2.0 * k * elliptic::complete_integrals(k).K * fluxons / length - 1.0) > 1e-9) {
    throw DomainError("lame_matrix_oracle: k does not fit n fluxons into the ring");
  }
  const TrainState train{k, 0.0, 1.0, 0.0};
  const double dx = length / nodes;
  const double inv_dx2 = 1.0 / (dx * dx);

  // Interleave nodes 0, N-1, 1, N-2, ... so the periodic Laplacian becomes a
  // band matrix with two super-diagonals.
  auto slot = [nodes](int node) { return node < nodes / 2 ? 2 * node : 2 * (nodes - 1 - node) + 1; };
  constexpr int kd = 2;
  const int ldab = kd + 1;
  std::vector<double> ab(static_cast<size_t>(ldab) * nodes, 0.0);
  auto at = [&](int r, int c) -> double& {
    if (r > c) std::swap(r, c);
    return ab[static_cast<size_t>(c) * ldab + (kd + r - c)];
  };
  for (int i = 0; i < nodes; ++i) {
    const double phi0 = fluxon_profile(i * dx, 0.0, train);
    at(slot(i), slot(i)) = 2.0 * inv_dx2 + std::cos(phi0);
    at(slot(i), slot((i + 1) % nodes)) = -inv_dx2;
  }

  std::vector<double> w(nodes);
  std::vector<lapack_int> ifail(nodes);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'I', 'U', nodes, kd, ab.data(), ldab,
                                         nullptr, 1, 0.0, 0.0, 1, count, 0.0, &found, w.data(),
                                         nullptr, 1, ifail.data());
  if (info != 0) throw ConvergenceError("lame_matrix_oracle: LAPACK dsbevx info = " + std::to_string(info));
  w.resize(found);
  return w;
}

std::vector<double> lame_matrix_oracle(double k, double length, int fluxons, int nodes, int count) {
  auto w = lame_matrix_eigenvalues(k, length, fluxons, nodes, count);
  for (double& x : w) x = std::copysign(std::sqrt(std::abs(x)), x);
  return w;
}

} // namespace fluxcirc
