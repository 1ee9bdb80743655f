#include "fluxcirc/fluxon.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "fluxcirc/elliptic.hpp"
#include "fluxcirc/errors.hpp"

namespace fluxcirc {
namespace {

constexpr double kModulusLow = 1e-12;
constexpr double kModulusHigh = 1.0 - 1e-12;
constexpr int kMaxIterations = 200;

double spacing_map(double k) { return 2.0 * k * elliptic::complete_integrals(k).K; }

// Largest Lorentz factor for which the modulus stays inside its bracket.
double max_gamma(double length, int fluxons) {
  return spacing_map(kModulusHigh) * (1.0 - 1e-9) * fluxons / length;
}

} // namespace

void JunctionParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("junction parameters: ") + what);
  };
  require(length > 0.0 && std::isfinite(length), "L must be positive");
  require(fluxons >= 0, "fluxon number must be non-negative");
  require(g >= 0.0, "g must be non-negative");
  require(p >= 0.0, "p must be non-negative");
  require(lambda_j > 0.0, "lambda_J must be positive");
  require(plasma_frequency > 0.0, "f_p must be positive");
  require(z_ljj > 0.0 && z0 > 0.0, "impedances must be positive");
}

double lorentz_factor(double v) {
  if (!(std::abs(v) < 1.0)) throw DomainError("fluxon velocity must satisfy |v| < 1");
  return 1.0 / std::sqrt((1.0 - v) * (1.0 + v));
}

double solve_modulus(double length, int fluxons, double v) {
  if (fluxons <= 0) throw DomainError("solve_modulus: no fluxons in the ring (n = 0)");
  if (!(length > 0.0)) throw DomainError("solve_modulus: L must be positive");
  const double target = lorentz_factor(v) * length / fluxons;
  if (target < spacing_map(kModulusLow) || target > spacing_map(kModulusHigh)) {
    throw ConvergenceError("solve_modulus: spacing gamma L/n = " + std::to_string(target) +
                           " has no modulus in [1e-12, 1-1e-12]");
  }

  // Bisect to 1e-6, then Newton on 2kK(k), whose derivative is 2E/k'^2.
  double lo = kModulusLow;
  double hi = kModulusHigh;
  int iter = 0;
  while (hi - lo > 1e-6) {
    if (++iter > kMaxIterations) throw ConvergenceError("solve_modulus: bisection stalled");
    const double mid = 0.5 * (lo + hi);
    (spacing_map(mid) < target ? lo : hi) = mid;
  }
  double k = 0.5 * (lo + hi);
  for (; iter < kMaxIterations; ++iter) {
    const auto ke = elliptic::complete_integrals(k);
    const double residual = 2.0 * k * ke.K - target;
    if (std::abs(residual) <= 1e-13 * target || hi - lo <= 4e-16) return k;
    const double kc = elliptic::complementary(k);
    double next = k - residual / (2.0 * ke.E / (kc * kc));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    (residual < 0.0 ? lo : hi) = k;
    k = next;
  }
  throw ConvergenceError("solve_modulus: no convergence after 200 iterations");
}

double bias_for_velocity(double v, double k, double g) {
  if (!(k > 0.0 && k < 1.0)) throw DomainError("bias_for_velocity: k must lie in (0, 1)");
  if (g < 0.0) throw DomainError("bias_for_velocity: g must be non-negative");
  const double E = elliptic::complete_integrals(k).E;
  return -4.0 * lorentz_factor(v) * v * g * E / (pi * k);
}

TrainState train_at_velocity(double v, double length, int fluxons, double g) {
  TrainState s;
  s.v = v;
  s.gamma = lorentz_factor(v);
  s.k = solve_modulus(length, fluxons, v);
  s.bias = bias_for_velocity(v, s.k, g);
  return s;
}

TrainState velocity_for_bias(double bias, double length, int fluxons, double g) {
  if (fluxons <= 0) throw DomainError("velocity_for_bias: no fluxons in the ring (n = 0)");
  if (bias == 0.0) return train_at_velocity(0.0, length, fluxons, g);
  if (!(g > 0.0)) throw DomainError("velocity_for_bias: needs g > 0 to balance a bias");

  // Velocity runs opposite to the bias; |i_b(v)| grows monotonically in |v|.
  const double direction = bias > 0.0 ? -1.0 : 1.0;
  const double gmax = max_gamma(length, fluxons);
  const double speed_max = gmax > 1.0 ? std::min(std::sqrt(1.0 - 1.0 / (gmax * gmax)), 1.0 - 1e-12) : 0.0;
  auto excess = [&](double speed) {
    const double v = direction * speed;
    return std::abs(bias_for_velocity(v, solve_modulus(length, fluxons, v), g)) - std::abs(bias);
  };
  if (speed_max <= 0.0 || excess(speed_max) < 0.0) {
    throw ConvergenceError("velocity_for_bias: |i_b| = " + std::to_string(std::abs(bias)) +
                           " lies past the v -> 1 asymptotic branch");
  }
  std::uintmax_t max_iter = kMaxIterations;
  const auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto [lo, hi] = boost::math::tools::toms748_solve(excess, 0.0, speed_max, -std::abs(bias),
                                                          excess(speed_max), tol, max_iter);
  if (max_iter >= static_cast<std::uintmax_t>(kMaxIterations)) {
    throw ConvergenceError("velocity_for_bias: root search did not converge");
  }
  TrainState s = train_at_velocity(direction * 0.5 * (lo + hi), length, fluxons, g);
  s.bias = bias;
  return s;
}

double fluxon_profile(double x, double t, const TrainState& train) {
  const double u = train.gamma * (x - train.v * t) / train.k;
  return pi + 2.0 * elliptic::jacobi(u, train.k).am;
}

ProfileDerivatives fluxon_profile_derivatives(double x, double t, const TrainState& train) {
  const double u = train.gamma * (x - train.v * t) / train.k;
  const auto f = elliptic::jacobi(u, train.k);
  const double slope = 2.0 * train.gamma * f.dn / train.k;
  return {pi + 2.0 * f.am, slope, -train.v * slope};
}

double dc_voltage(double length, int fluxons, const TrainState& train) {
  return 2.0 * pi * fluxons * train.v / length;
}

double dc_voltage_from_bias(double bias, double g, double k) {
  if (!(g > 0.0)) throw DomainError("dc_voltage_from_bias: needs g > 0");
  const auto ke = elliptic::complete_integrals(k);
  return -pi * pi * bias / (4.0 * g * ke.E * ke.K);
}

std::vector<IvPoint> iv_curve(const JunctionParams& params, std::span<const double> bias_grid) {
  params.validate();
  if (!(params.g > 0.0)) throw DomainError("iv_curve: needs g > 0");
  std::vector<IvPoint> out;
  out.reserve(bias_grid.size());
  for (double ib : bias_grid) {
    IvPoint pt;
    pt.bias = ib;
    if (params.fluxons == 0) {
      // Pinned branch; switching out of it at |i_b| >= 1 is not modelled.
      pt.valid = std::abs(ib) < 1.0;
      out.push_back(pt);
      continue;
    }
    try {
      const auto train = velocity_for_bias(ib, params.length, params.fluxons, params.g);
      pt.velocity = train.v;
      pt.modulus = train.k;
      pt.voltage = dc_voltage(params.length, params.fluxons, train);
    } catch (const ConvergenceError&) {
      pt.valid = false;
    }
    out.push_back(pt);
  }
  return out;
}

} // namespace fluxcirc
