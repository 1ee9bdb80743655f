#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fluxcirc/elliptic.hpp"
#include "fluxcirc/errors.hpp"
#include "fluxcirc/fluxon.hpp"

using namespace fluxcirc;

namespace {

double quadrature_K(double k) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [k](double t) { return 1.0 / std::sqrt(1.0 - k * k * std::sin(t) * std::sin(t)); }, 0.0, pi / 2,
      15, 1e-15);
}

} // namespace

TEST_CASE("solve_modulus against a bisection oracle") {
  const double target = 15.0 / 8.0;
  double lo = 1e-9, hi = 1.0 - 1e-9;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (2 * mid * quadrature_K(mid) < target ? lo : hi) = mid;
  }
  const double k = solve_modulus(15.0, 8, 0.0);
  CHECK(std::abs(k - 0.5 * (lo + hi)) < 1e-9);
  CHECK(std::abs(2 * k * elliptic::complete_integrals(k).K - target) <= 1e-12 * target);

  // 2kK(k) = gamma L/n: the cell stretches in the train frame, so k grows with |v|.
  CHECK(solve_modulus(15.0, 8, 0.9) > solve_modulus(15.0, 8, 0.0));
  double prev = 0.0;
  for (double v : {0.0, 0.1, 0.3, 0.6, 0.9}) {
    const double kv = solve_modulus(26.0, 8, -v);
    CHECK(kv > prev);
    CHECK(kv == solve_modulus(26.0, 8, v));
    prev = kv;
  }

  CHECK_THROWS_AS(solve_modulus(15.0, 0, 0.0), DomainError);
  CHECK_THROWS_AS(solve_modulus(15.0, 8, 1.0), DomainError);
}

TEST_CASE("bias_for_velocity") {
  CHECK(bias_for_velocity(0.0, 0.8, 0.02) == 0.0);
  CHECK(bias_for_velocity(0.3, 0.8, 0.0) == 0.0);
  CHECK(bias_for_velocity(0.3, 0.8, 0.02) < 0.0);
  const double v = 0.2, k = 0.7, g = 0.01;
  const double E = elliptic::complete_integrals(k).E;
  CHECK(bias_for_velocity(v, k, g) == doctest::Approx(-4 * v * g * E / (pi * k * std::sqrt(1 - v * v))));
}

TEST_CASE("velocity_for_bias residuals and round trip") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-0.02, 0.02);
  const double L = 26.0, g = 0.02;
  const int n = 8;
  for (int i = 0; i < 20; ++i) {
    const double ib = dist(rng);
    const auto s = velocity_for_bias(ib, L, n, g);
    CHECK(std::abs(s.v) < 1.0);
    CHECK(std::abs(s.gamma - 1.0 / std::sqrt(1 - s.v * s.v)) < 1e-12);
    const auto ke = elliptic::complete_integrals(s.k);
    CHECK(std::abs(L / n - 2 * s.k * ke.K / s.gamma) < 1e-10);
    CHECK(std::abs(s.bias + 4 * s.gamma * s.v * g * ke.E / (pi * s.k)) < 1e-10);
    CHECK(std::abs(bias_for_velocity(s.v, s.k, g) - ib) < 1e-9);
  }

  const auto rest = velocity_for_bias(0.0, L, n, g);
  CHECK(rest.v == 0.0);
  CHECK(rest.k == solve_modulus(L, n, 0.0));

  CHECK_THROWS_AS(velocity_for_bias(1e-3, L, n, 0.0), DomainError);
  CHECK_THROWS_AS(velocity_for_bias(50.0, L, n, g), ConvergenceError);
}

TEST_CASE("circulator operating point velocity") {
  // Friction at the circulator point comes from the three matched ports.
  JunctionParams p;
  const double g_eff = p.g + 3 * p.z() / p.length;
  const auto s = velocity_for_bias(3e-4, p.length, p.fluxons, g_eff);
  CHECK(std::abs(std::abs(s.v) - 0.036) < 0.1 * 0.036);
  const double volts = std::abs(dc_voltage(p.length, p.fluxons, s)) * p.voltage_unit();
  CHECK(std::abs(volts - 4.8e-6) < 0.1 * 4.8e-6);
}

TEST_CASE("fluxon profile properties") {
  const auto s = train_at_velocity(0.3, 15.0, 8, 0.02);
  for (double x : {-3.0, 0.0, 0.77, 4.2}) {
    CHECK(std::abs(fluxon_profile(x + 15.0 / 8, 0.4, s) - fluxon_profile(x, 0.4, s) - 2 * pi) < 1e-9);
    CHECK(std::abs(fluxon_profile(x + 15.0, 0.4, s) - fluxon_profile(x, 0.4, s) - 16 * pi) < 1e-9);
    CHECK(std::abs(fluxon_profile(x, 2.0, s) - fluxon_profile(x - s.v * 0.5, 1.5, s)) < 1e-12);
  }
  const double winding = (fluxon_profile(15.0, 0.0, s) - fluxon_profile(0.0, 0.0, s)) / (2 * pi);
  CHECK(std::abs(winding - std::round(winding)) < 1e-6);
  CHECK(std::lround(winding) == 8);
}

TEST_CASE("fluxon profile solves the undamped equation pointwise") {
  const auto s = train_at_velocity(-0.35, 15.0, 8, 0.0);
  const double h = 2e-3;
  auto phi = [&](double x, double t) { return fluxon_profile(x, t, s); };
  auto d1 = [&](auto f) { return (-f(2) + 8 * f(1) - 8 * f(-1) + f(-2)) / (12 * h); };
  auto d2 = [&](auto f) { return (-f(2) + 16 * f(1) - 30 * f(0) + 16 * f(-1) - f(-2)) / (12 * h * h); };
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double x = 0.05 * i;
    const double t = 0.7;
    const double ptt = d2([&](int j) { return phi(x, t + j * h); });
    const double pxx = d2([&](int j) { return phi(x + j * h, t); });
    const double pt = d1([&](int j) { return phi(x, t + j * h); });
    worst = std::max(worst, std::abs(ptt - pxx + std::sin(phi(x, t)) - s.bias));
    CHECK(std::abs(fluxon_profile_derivatives(x, t, s).phi_t - pt) < 1e-8);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("bias balances damping in the force on the train") {
  // With g > 0 the profile is exact only on average: the residual
  // i_b - g phi_t must be orthogonal to the translation mode phi_x.
  const double g = 0.02;
  const auto s = velocity_for_bias(-0.01, 15.0, 8, g);
  const int samples = 20000;
  const double cell = 15.0 / 8;
  double force = 0.0, scale = 0.0;
  for (int i = 0; i < samples; ++i) {
    const auto d = fluxon_profile_derivatives(cell * (i + 0.5) / samples, 0.0, s);
    force += (s.bias - g * d.phi_t) * d.phi_x;
    scale += std::abs(s.bias * d.phi_x);
  }
  CHECK(std::abs(force) < 1e-6 * scale);
}

TEST_CASE("dc voltage forms") {
  CHECK(dc_voltage(26, 8, train_at_velocity(0.0, 26, 8, 0.02)) == 0.0);
  for (double ib : {-0.01, 2e-3, 0.03}) {
    const auto s = velocity_for_bias(ib, 15.0, 8, 0.02);
    CHECK(std::abs(dc_voltage(15.0, 8, s) - dc_voltage_from_bias(ib, 0.02, s.k)) < 1e-9);
  }
  // Dense, slow train: V ~ -i_b / g.
  const double ib = 1e-4, g = 0.02;
  const auto s = velocity_for_bias(ib, 2.0, 8, g);
  CHECK(std::abs(dc_voltage(2.0, 8, s) + ib / g) < 0.02 * ib / g);
}

TEST_CASE("analytic I-V curve") {
  JunctionParams p;
  p.length = 15.0;
  p.g = 0.02;
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(0.005 * i);

  p.fluxons = 0;
  for (const auto& pt : iv_curve(p, grid)) {
    CHECK(pt.voltage == 0.0);
    CHECK(pt.valid);
  }

  for (int n : {2, 4, 6, 8}) {
    p.fluxons = n;
    const auto curve = iv_curve(p, grid);
    double prev = -1.0;
    for (const auto& pt : curve) {
      if (!pt.valid) continue;
      CHECK(std::abs(pt.voltage) >= prev);
      CHECK(std::abs(pt.voltage) < 2 * pi * n / p.length);
      prev = std::abs(pt.voltage);
    }
    const double asym = 2 * pi * n / p.length;
    const auto last = std::find_if(curve.rbegin(), curve.rend(), [](const IvPoint& q) { return q.valid; });
    REQUIRE(last != curve.rend());
    CHECK(std::abs(std::abs(last->voltage) - asym) < 0.05 * asym);
  }
  // Dense train reaches v -> 1 inside the representable modulus range.
  const double strong[] = {0.3};
  p.fluxons = 8;
  const auto top = iv_curve(p, strong)[0];
  REQUIRE(top.valid);
  CHECK(std::abs(top.velocity) > 0.99);
  CHECK(std::abs(std::abs(top.voltage) - 2 * pi * 8 / p.length) < 0.01 * 2 * pi * 8 / p.length);
  const double huge[] = {100.0};
  p.fluxons = 8;
  CHECK_FALSE(iv_curve(p, huge)[0].valid);
}
