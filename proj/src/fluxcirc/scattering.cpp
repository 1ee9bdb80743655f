#include "fluxcirc/scattering.hpp"
#include "fluxcirc/tcm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace fluxcirc {
namespace {

// 4-term Blackman-Harris; side lobes sit below -92 dB, so fluxon harmonics a
// few bins away from the drive do not leak into the phasor.
constexpr double kBh0 = 0.35875;
constexpr double kBh1 = 0.48829;
constexpr double kBh2 = 0.14128;
constexpr double kBh3 = 0.01168;

double blackman_harris(double tau) {
  const double a = 2.0 * pi * tau;
  return kBh0 - kBh1 * std::cos(a) + kBh2 * std::cos(2.0 * a) - kBh3 * std::cos(3.0 * a);
}

} // namespace

double input_power(const JunctionParams& params, double amplitude) {
  const double v = amplitude * params.voltage_unit();
  return v * v / params.z0;
}

double amplitude_for_power(const JunctionParams& params, double watts) {
  if (!(watts >= 0.0)) throw DomainError("amplitude_for_power: negative power");
  return std::sqrt(watts * params.z0) / params.voltage_unit();
}

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }
double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

Demodulator::Demodulator(double omega, double t0, double length, std::size_t channels)
    : omega_(omega), t0_(t0), length_(length), acc_(channels) {
  if (!(length > 0.0)) throw DomainError("Demodulator: window length must be positive");
}

void Demodulator::add(double t, std::span<const double> x) {
  const double tau = (t - t0_) / length_;
  if (tau < 0.0 || tau > 1.0 + 1e-12) return;
  const double w = blackman_harris(std::min(tau, 1.0));
  const cplx rot = std::polar(w, -omega_ * t);
  for (std::size_t j = 0; j < acc_.size(); ++j) acc_[j] += x[j] * rot;
  weight_sum_ += w;
}

std::vector<cplx> Demodulator::phasors() const {
  std::vector<cplx> out(acc_.size());
  if (weight_sum_ <= 0.0) return out;
  for (std::size_t j = 0; j < acc_.size(); ++j) out[j] = 2.0 * acc_[j] / weight_sum_;
  return out;
}

ScatterPoint s_column(const Ring& ring, double bias, const DriveSpec& drive, const Numerics& numerics) {
  const std::size_t ports = ring.ports.size();
  if (drive.port < 0 || drive.port >= static_cast<int>(ports)) throw DomainError("s_column: bad drive port");
  if (!(drive.omega_d > 0.0) || !(drive.amplitude > 0.0)) {
    throw DomainError("s_column: drive needs omega_d > 0 and amplitude > 0");
  }
  if (numerics.demod_periods < 1 || numerics.max_windows < 2) {
    throw DomainError("s_column: needs demod_periods >= 1 and max_windows >= 2");
  }

  // Whole number of steps per drive period keeps every window on the grid.
  const double period = 2.0 * pi / drive.omega_d;
  const long steps_per_period =
      std::max<long>(1, static_cast<long>(std::ceil(period / (numerics.dt_factor * ring.dx) - 1e-9)));
  const double dt = period / steps_per_period;
  const double gx = external_rate(ring);
  double transient = numerics.transient_periods * period;
  if (gx > 0.0) transient = std::max(transient, numerics.transient_decay / gx);
  transient = std::ceil(transient / period - 1e-9) * period;
  const double window = numerics.demod_periods * period;

  ScatterPoint pt;
  pt.drive_port = drive.port;
  pt.omega_d = drive.omega_d;
  pt.amplitude = drive.amplitude;
  pt.bias = bias;
  pt.transient = transient;
  pt.window_length = window;
  pt.p_in = input_power(ring.params, drive.amplitude);

  FieldState driven = initialize(ring, bias);
  if (ring.params.fluxons > 0) pt.velocity = loaded_train(ring, bias).v;
  FieldState quiet = driven;
  const DriveSpec drives[] = {drive};
  const std::span<const DriveSpec> on(drives);
  const std::span<const DriveSpec> off;

  evolve(ring, bias, on, driven, transient, dt);
  if (numerics.subtract_background) evolve(ring, bias, off, quiet, transient, dt);

  const cplx v_in = std::polar(drive.amplitude, drive.phase);
  const double passage = 2.0 * pi * ring.params.fluxons * std::abs(pt.velocity) / ring.params.length;
  std::vector<double> side;
  for (int m : {-2, -1, 1, 2}) {
    if (passage > 0.0 && drive.omega_d + m * passage > 0.0) side.push_back(drive.omega_d + m * passage);
  }
  std::vector<cplx> prev;
  for (int k = 0; k < numerics.max_windows; ++k) {
    Demodulator dd(drive.omega_d, driven.t, window, ports);
    std::vector<Demodulator> ds, bs;
    for (double w : side) {
      ds.emplace_back(w, driven.t, window, ports);
      bs.emplace_back(w, quiet.t, window, ports);
    }
    double mean_sum = 0.0;
    long mean_count = 0;
    evolve(ring, bias, on, driven, window, dt, [&](const StepView& s) {
      dd.add(s.t, s.v_out);
      for (auto& d : ds) d.add(s.t, s.v_out);
      mean_sum += s.mean_phi_t;
      ++mean_count;
    });
    auto ph = dd.phasors();
    if (numerics.subtract_background) {
      Demodulator db(drive.omega_d, quiet.t, window, ports);
      evolve(ring, bias, off, quiet, window, dt, [&](const StepView& s) {
        db.add(s.t, s.v_out);
        for (auto& b : bs) b.add(s.t, s.v_out);
      });
      const auto bg = db.phasors();
      for (std::size_t j = 0; j < ports; ++j) ph[j] -= bg[j];
    }
    std::vector<cplx> s(ports);
    double norm = 0.0;
    for (std::size_t j = 0; j < ports; ++j) {
      s[j] = ph[j] / v_in;
      norm += std::norm(s[j]);
    }
    for (std::size_t m = 0; m < side.size(); ++m) {
      const auto a = ds[m].phasors();
      const auto b = numerics.subtract_background ? bs[m].phasors() : std::vector<cplx>(ports);
      for (std::size_t j = 0; j < ports; ++j) norm += std::norm((a[j] - b[j]) / v_in);
    }
    pt.sideband_norm = norm;

    pt.s = s;
    pt.windows = k + 1;
    pt.v_dc = mean_sum / std::max(1L, mean_count);
    pt.v_dc_volts = pt.v_dc * ring.params.voltage_unit();
    const double vdc = pt.v_dc_volts;
    pt.p_diss = ports > 0 ? vdc * vdc / (ring.params.z0 / static_cast<double>(ports)) : 0.0;
    if (!prev.empty()) {
      double change = 0.0;
      for (std::size_t j = 0; j < ports; ++j) change = std::max(change, std::abs(std::abs(s[j]) - std::abs(prev[j])));
      pt.window_change = change;
      if (change <= numerics.tolerance) {
        pt.converged = true;
        return pt;
      }
    }
    prev = s;
  }
  pt.error = "consecutive demodulation windows differ by " + std::to_string(pt.window_change);
  throw ScatterConvergenceError("s_column: " + pt.error, pt);
}

Ring default_ring(const JunctionParams& params, const Numerics& numerics, double capacitance) {
  const int nodes = numerics.nodes > 0 ? numerics.nodes : default_nodes(params.length);
  return make_ring(params, symmetric_ports(params, 3, capacitance), nodes);
}

int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<ScatterPoint> sweep(const SweepRequest& request, const std::vector<SweepPoint>& grid) {
  const Ring ring = default_ring(request.params, request.numerics, request.capacitance);
  std::vector<ScatterPoint> out(grid.size());
  parallel_for(grid.size(), request.workers, [&](std::size_t i) {
    const auto& g = grid[i];
    const DriveSpec drive{request.drive_port, g.amplitude, g.omega_d, 0.0};
    try {
      out[i] = s_column(ring, g.bias, drive, request.numerics);
    } catch (const ScatterConvergenceError& e) {
      out[i] = e.point();
    } catch (const std::exception& e) {
      ScatterPoint p;
      p.drive_port = request.drive_port;
      p.omega_d = g.omega_d;
      p.amplitude = g.amplitude;
      p.bias = g.bias;
      p.s.assign(ring.ports.size(), cplx(std::nan(""), std::nan("")));
      p.error = e.what();
      out[i] = p;
    }
  });
  return out;
}

cplx lc_reflection_galvanic(double omega, double inductance, double capacitance, double z0) {
  if (!(inductance > 0.0 && capacitance > 0.0 && z0 > 0.0)) {
    throw DomainError("lc_reflection: component values must be positive");
  }
  const cplx i(0.0, 1.0);
  const double L = inductance;
  // (Z_L - Z0)/(Z_L + Z0) with Z_L = i omega L / (1 - omega^2 L C), cleared of the pole.
  return -1.0 + 2.0 * i * omega * L / (i * omega * L + z0 * (1.0 - omega * omega * L * capacitance));
}

cplx lc_reflection_capacitive(double omega, double inductance, double capacitance, double coupling_capacitance,
                              double z0) {
  if (!(inductance > 0.0 && capacitance > 0.0 && coupling_capacitance > 0.0 && z0 > 0.0)) {
    throw DomainError("lc_reflection: component values must be positive");
  }
  if (std::isinf(coupling_capacitance)) return lc_reflection_galvanic(omega, inductance, capacitance, z0);
  const cplx i(0.0, 1.0);
  const double tank = 1.0 - omega * omega * inductance * capacitance;
  if (tank == 0.0) return 1.0;
  const cplx zl = 1.0 / (i * omega * coupling_capacitance) + i * omega * inductance / tank;
  return (zl - z0) / (zl + z0);
}

cplx lc_reflection_oracle(double omega, double inductance, double capacitance, std::optional<double> coupling,
                          double z0) {
  return coupling ? lc_reflection_capacitive(omega, inductance, capacitance, *coupling, z0)
                  : lc_reflection_galvanic(omega, inductance, capacitance, z0);
}

} // namespace fluxcirc
