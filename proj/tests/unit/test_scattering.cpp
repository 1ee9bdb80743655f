#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>

#include "fluxcirc/scattering.hpp"
#include "fluxcirc/spectrum.hpp"
#include "fluxcirc/tcm.hpp"

using namespace fluxcirc;

TEST_CASE("LC reflection: limits") {
  const double L = 1.3, C = 0.7, z0 = 2.0;
  const double w0 = 1.0 / std::sqrt(L * C);
  CHECK(std::abs(lc_reflection_galvanic(1e-9, L, C, z0) + 1.0) < 1e-8);
  CHECK(std::abs(lc_reflection_galvanic(w0, L, C, z0) - 1.0) < 1e-12);
  CHECK(std::abs(lc_reflection_capacitive(w0, L, C, 0.4, z0) - 1.0) < 1e-12);
  for (double w : {0.1, 0.5, 0.9, 1.1, 1.7, 2.5, 4.0, 7.0}) {
    CHECK(std::abs(lc_reflection_galvanic(w, L, C, z0)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Large coupling capacitance is a short: galvanic limit at ten frequencies.
  for (int i = 0; i < 10; ++i) {
    const double w = 0.2 + 0.37 * i;
    const cplx g = lc_reflection_galvanic(w, L, C, z0);
    CHECK(std::abs(lc_reflection_capacitive(w, L, C, 1e12, z0) - g) < 1e-9);
    CHECK(std::abs(lc_reflection_oracle(w, L, C, std::nullopt, z0) - g) == 0.0);
  }
  CHECK(lc_reflection_capacitive(0.3, L, C, INFINITY, z0) == lc_reflection_galvanic(0.3, L, C, z0));
  CHECK_THROWS_AS(lc_reflection_galvanic(1.0, -1.0, C, z0), DomainError);
}

TEST_CASE("LC reflection: direct impedance form") {
  const double L = 0.8, C = 1.9, cc = 0.6, z0 = 1.5;
  const cplx i(0.0, 1.0);
  for (double w : {0.3, 0.6, 1.2}) {
    const cplx zt = 1.0 / (1.0 / (i * w * L) + i * w * C);
    const cplx zg = zt;
    const cplx zc = zt + 1.0 / (i * w * cc);
    CHECK(std::abs(lc_reflection_galvanic(w, L, C, z0) - (zg - z0) / (zg + z0)) < 1e-12);
    CHECK(std::abs(lc_reflection_capacitive(w, L, C, cc, z0) - (zc - z0) / (zc + z0)) < 1e-12);
  }
}

TEST_CASE("power conversions") {
  JunctionParams jp;
  CHECK(jp.voltage_unit() == doctest::Approx(6.93e-5).epsilon(0.002));
  CHECK(amplitude_for_power(jp, dbm_to_watts(-120.0)) == doctest::Approx(kDefaultAmplitude).epsilon(0.02));
  CHECK(watts_to_dbm(input_power(jp, kDefaultAmplitude)) == doctest::Approx(-120.0).epsilon(0.002));
  CHECK(watts_to_dbm(1e-3) == 0.0);
  CHECK(dbm_to_watts(watts_to_dbm(3.7e-13)) == doctest::Approx(3.7e-13).epsilon(1e-14));
  CHECK(input_power(jp, amplitude_for_power(jp, 2e-15)) == doctest::Approx(2e-15).epsilon(1e-14));
  CHECK_THROWS_AS(amplitude_for_power(jp, -1.0), DomainError);
}

TEST_CASE("demodulator recovers a tone next to strong neighbours") {
  const double w = 0.7, period = 2 * pi / w;
  const double len = 64 * period;
  const int steps = 64 * 200;
  Demodulator d(w, 5 * period, len, 2);
  for (int n = 0; n <= steps; ++n) {
    const double t = 5 * period + len * n / steps;
    const double x[2] = {
        0.3 * std::cos(w * t + 0.4) + 5.0 + 2.0 * std::cos(1.3 * w * t),
        1e-3 * std::cos(w * t - 2.0) + 0.5 * std::sin(3.0 * w * t),
    };
    d.add(t, x);
  }
  const auto ph = d.phasors();
  CHECK(std::abs(ph[0] - std::polar(0.3, 0.4)) < 1e-5); // side lobe of the 1.3 w neighbour
  CHECK(std::abs(ph[1] - std::polar(1e-3, -2.0)) < 1e-9);
  CHECK(!d.done(5 * period + len / 2));
  CHECK(d.done(5 * period + len));
  CHECK_THROWS_AS(Demodulator(w, 0.0, 0.0, 1), DomainError);
}

TEST_CASE("parallel_for: every index once, exceptions propagate") {
  std::vector<int> hits(101, 0);
  std::atomic<int> total{0};
  parallel_for(hits.size(), 4, [&](std::size_t i) {
    hits[i] += 1;
    total += static_cast<int>(i);
  });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK(total == 5050);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw NumericalError("boom");
                  }),
                  NumericalError);
  int serial = 0;
  parallel_for(5, 1, [&](std::size_t) { ++serial; });
  CHECK(serial == 5);
  CHECK(default_workers() >= 1);
}

TEST_CASE("s_column: argument checks") {
  JunctionParams jp;
  jp.length = 10;
  jp.fluxons = 4;
  const auto ring = make_ring(jp, symmetric_ports(jp), 201);
  CHECK_THROWS_AS(s_column(ring, 0.0, {3, 1e-3, 0.5, 0.0}), DomainError);
  CHECK_THROWS_AS(s_column(ring, 0.0, {0, 0.0, 0.5, 0.0}), DomainError);
  CHECK_THROWS_AS(s_column(ring, 0.0, {0, 1e-3, -0.5, 0.0}), DomainError);
}

TEST_CASE("s_column: static ring is reciprocal and lossless") {
  JunctionParams jp;
  jp.length = 10;
  jp.fluxons = 4;
  const auto ring = make_ring(jp, symmetric_ports(jp), 201);
  const double w1 = mode_frequency_static(1, 4, solve_modulus(10, 4, 0.0)).omega;
  Numerics nm;
  nm.nodes = 201;
  for (double w : {w1, w1 + external_rate(ring)}) {
    const auto pt = s_column(ring, 0.0, {0, kDefaultAmplitude, w, 0.0}, nm);
    CHECK(pt.converged);
    CHECK(std::abs(std::abs(pt.s[1]) - std::abs(pt.s[2])) <= 1e-2);
    const double norm = std::norm(pt.s[0]) + std::norm(pt.s[1]) + std::norm(pt.s[2]);
    CHECK(norm == doctest::Approx(1.0).epsilon(0.02));
    CHECK(pt.sideband_norm == norm);
    CHECK(std::abs(pt.v_dc_volts) < 1e-9);
    CHECK(pt.windows >= 2);
    CHECK(std::fmod(pt.transient * w / (2 * pi) + 1e-9, 1.0) < 1e-6);
  }
}

TEST_CASE("s_column: a moving train conserves energy over the sidebands") {
  JunctionParams jp;
  jp.length = 10;
  jp.fluxons = 4;
  Numerics nm;
  nm.nodes = 201;
  const auto ring = default_ring(jp, nm);
  const double w1 = mode_frequency_static(1, 4, solve_modulus(10, 4, 0.0)).omega;
  const auto pt = s_column(ring, 1e-3, {0, kDefaultAmplitude, w1, 0.0}, nm);
  REQUIRE(pt.converged);
  const double norm = std::norm(pt.s[0]) + std::norm(pt.s[1]) + std::norm(pt.s[2]);
  MESSAGE("drive-frequency norm " << norm << ", with sidebands " << pt.sideband_norm);
  CHECK(pt.sideband_norm == doctest::Approx(1.0).epsilon(0.02));
  CHECK(norm < pt.sideband_norm);
}

TEST_CASE("sweep keeps order and records failures") {
  SweepRequest req;
  req.params.length = 10;
  req.params.fluxons = 4;
  req.numerics.nodes = 201;
  req.numerics.transient_decay = 0;
  req.numerics.transient_periods = 2;
  req.numerics.demod_periods = 2;
  req.numerics.max_windows = 2;
  req.numerics.tolerance = 10.0;
  req.workers = 2;
  const std::vector<SweepPoint> grid = {{0.0, 0.5, 1e-3}, {0.0, -1.0, 1e-3}, {0.0, 0.6, 1e-3}};
  const auto out = sweep(req, grid);
  REQUIRE(out.size() == 3);
  CHECK(out[0].omega_d == 0.5);
  CHECK(out[0].converged);
  CHECK_FALSE(out[1].converged);
  CHECK(!out[1].error.empty());
  CHECK(out[2].omega_d == 0.6);
  CHECK(out[2].converged);
}
