#include "fluxcirc/sgpde.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "fluxcirc/elliptic.hpp"
#include "fluxcirc/errors.hpp"
#include "fluxcirc/sine_kernel.hpp"

namespace fluxcirc {
namespace {

constexpr int kHarmonicSamples = 512;
constexpr int kHarmonics = 64;
constexpr double kPhaseRecentre = 512.0;

double wrap(double a) { return a - 2.0 * pi * std::round(a / (2.0 * pi)); }

// Time-stepping scratch: one RK4 stage worth of buffers.
struct Workspace {
  std::vector<double> sin_phi;
  std::vector<double> v_in;
  std::vector<double> k_phi[4];
  std::vector<double> k_phit[4];
  std::vector<double> k_aux[4];
  FieldState stage;

  explicit Workspace(const Ring& ring) : sin_phi(ring.nodes), v_in(ring.ports.size()) {
    for (int s = 0; s < 4; ++s) {
      k_phi[s].resize(ring.nodes);
      k_phit[s].resize(ring.nodes);
      k_aux[s].resize(ring.capacitive_ports);
    }
    stage.phi.resize(ring.nodes);
    stage.phi_t.resize(ring.nodes);
    stage.port_aux.resize(ring.capacitive_ports);
  }
};

void derivative(const Ring& ring, double bias, std::span<const double> v_in, const FieldState& s,
                std::span<double> dphi, std::span<double> dphi_t, std::span<double> daux,
                std::vector<double>& sin_phi) {
  const int N = ring.nodes;
  const double inv_dx2 = 1.0 / (ring.dx * ring.dx);
  const double g = ring.params.g;
  const double p = ring.params.p;
  const double seam = 2.0 * pi * ring.params.fluxons;
  const double* __restrict phi = s.phi.data();
  const double* __restrict pt = s.phi_t.data();
  const double* __restrict sn = sin_phi.data();
  double* __restrict acc = dphi_t.data();

  detail::sine_block(phi, sin_phi.data(), static_cast<std::size_t>(N));
  std::copy(s.phi_t.begin(), s.phi_t.end(), dphi.begin());

  auto node = [&](int i, double left, double right, double left_t, double right_t) {
    const double lap = (right - 2.0 * phi[i] + left) * inv_dx2;
    double a = lap - sn[i] + bias - g * pt[i];
    if (p != 0.0) a += p * (right_t - 2.0 * pt[i] + left_t) * inv_dx2;
    acc[i] = a;
  };
  if (N == 1) {
    // Lumped limit: both neighbours are the node itself and the seam cancels.
    node(0, phi[0] - seam, phi[0] + seam, pt[0], pt[0]);
  } else {
    node(0, phi[N - 1] - seam, phi[1], pt[N - 1], pt[1]);
    for (int i = 1; i < N - 1; ++i) {
      const double lap = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) * inv_dx2;
      acc[i] = lap - sn[i] + bias - g * pt[i];
    }
    if (p != 0.0) {
      for (int i = 1; i < N - 1; ++i) acc[i] += p * (pt[i + 1] - 2.0 * pt[i] + pt[i - 1]) * inv_dx2;
    }
    node(N - 1, phi[N - 2], phi[0] + seam, pt[N - 2], pt[0]);
  }

  const double inv_dx = 1.0 / ring.dx;
  for (std::size_t j = 0; j < ring.ports.size(); ++j) {
    const auto& port = ring.ports[j];
    const int i = ring.port_nodes[j];
    if (port.kind == PortKind::galvanic) {
      acc[i] += port.z * inv_dx * (2.0 * v_in[j] - pt[i]);
    } else {
      const int a = ring.aux_index[j];
      const double vwg = s.port_aux[a];
      acc[i] += port.g_c * port.p_c * inv_dx * (2.0 * v_in[j] - vwg);
      daux[a] = acc[i] - port.p_c * (vwg - 2.0 * v_in[j]);
    }
  }
}

void check_finite(const FieldState& s, double blowup) {
  for (std::size_t i = 0; i < s.phi_t.size(); ++i) {
    if (!(std::abs(s.phi_t[i]) <= blowup) || !std::isfinite(s.phi[i])) {
      throw NumericalError("sgpde: blow-up at t = " + std::to_string(s.t) + ", node " +
                           std::to_string(i) + ", phi_t = " + std::to_string(s.phi_t[i]));
    }
  }
  for (double v : s.port_aux) {
    if (!(std::abs(v) <= blowup)) {
      throw NumericalError("sgpde: port voltage blow-up at t = " + std::to_string(s.t));
    }
  }
}

// Shift every node by the same multiple of 2 pi; sin, cos and the seam are unchanged.
void recentre(FieldState& s) {
  if (std::abs(s.phi[0]) < kPhaseRecentre) return;
  const double shift = 2.0 * pi * std::round(s.phi[0] / (2.0 * pi));
  for (double& x : s.phi) x -= shift;
}

} // namespace

PortConfig galvanic_port(double position, double z) {
  PortConfig p;
  p.position = position;
  p.kind = PortKind::galvanic;
  p.z = z;
  return p;
}

PortConfig capacitive_port(double position, const JunctionParams& params, double capacitance) {
  if (!(capacitance > 0.0)) throw DomainError("capacitive port: C_C must be positive");
  const double zc = 1.0 / (params.omega_p() * capacitance);
  PortConfig p;
  p.position = position;
  p.kind = PortKind::capacitive;
  p.g_c = params.z_ljj / zc;
  p.p_c = zc / params.z0;
  p.z = p.g_c * p.p_c;
  return p;
}

std::vector<PortConfig> symmetric_ports(const JunctionParams& params, int count, double capacitance) {
  std::vector<PortConfig> ports;
  for (int j = 0; j < count; ++j) {
    const double x = params.length * j / count;
    ports.push_back(capacitance > 0.0 ? capacitive_port(x, params, capacitance)
                                      : galvanic_port(x, params.z()));
  }
  return ports;
}

int default_nodes(double length, double per_unit, int multiple) {
  const int raw = static_cast<int>(std::ceil(length * per_unit - 1e-9));
  return ((raw + multiple - 1) / multiple) * multiple;
}

Ring make_ring(const JunctionParams& params, std::vector<PortConfig> ports, int nodes, bool lumped) {
  params.validate();
  if (lumped ? nodes != 1 : (nodes < 3 || nodes < 20.0 * params.length - 1e-9)) {
    throw DomainError("sgpde: N = " + std::to_string(nodes) + (lumped ? " (lumped ring needs N = 1)" : " is below 20 nodes per lambda_J"));
  }
  Ring r;
  r.params = params;
  r.nodes = nodes;
  r.dx = params.length / nodes;
  for (const auto& port : ports) {
    if (!(port.position >= 0.0 && port.position < params.length)) {
      throw DomainError("sgpde: port position must lie in [0, L)");
    }
    if (port.kind == PortKind::galvanic && !(port.z > 0.0)) {
      throw DomainError("sgpde: galvanic port needs z > 0");
    }
    if (port.kind == PortKind::capacitive && !(port.g_c > 0.0 && port.p_c > 0.0)) {
      throw DomainError("sgpde: capacitive port needs g_C > 0 and p_C > 0");
    }
    const int node = static_cast<int>(std::lround(port.position / r.dx)) % nodes;
    if (std::find(r.port_nodes.begin(), r.port_nodes.end(), node) != r.port_nodes.end()) {
      throw DomainError("sgpde: two ports map to grid node " + std::to_string(node));
    }
    r.port_nodes.push_back(node);
    r.aux_index.push_back(port.kind == PortKind::capacitive ? r.capacitive_ports++ : -1);
  }
  r.ports = std::move(ports);
  return r;
}

double effective_damping(const Ring& ring, double v) {
  const auto& P = ring.params;
  double g = P.g;
  bool capacitive = false;
  for (const auto& port : ring.ports) {
    if (port.kind == PortKind::galvanic) {
      g += port.z / P.length;
    } else {
      capacitive = true;
    }
  }
  if (!capacitive || P.fluxons == 0 || v == 0.0) return g;

  // Fraction of <phi_t^2> at a port carried by each harmonic of the
  // fluxon passing frequency, weighted by the port's AC transmission.
  const auto train = train_at_velocity(v, P.length, P.fluxons, 0.0);
  const double cell = P.length / P.fluxons;
  std::vector<double> samples(kHarmonicSamples);
  double total = 0.0;
  for (int i = 0; i < kHarmonicSamples; ++i) {
    samples[i] = fluxon_profile_derivatives(cell * i / kHarmonicSamples, 0.0, train).phi_x;
    total += samples[i] * samples[i];
  }
  total /= kHarmonicSamples;
  const double passing = 2.0 * pi * std::abs(v) / cell;
  for (const auto& port : ring.ports) {
    if (port.kind != PortKind::capacitive) continue;
    double weighted = 0.0;
    for (int m = 1; m <= kHarmonics; ++m) {
      std::complex<double> c = 0.0;
      for (int i = 0; i < kHarmonicSamples; ++i) {
        c += samples[i] * std::polar(1.0, -2.0 * pi * m * i / kHarmonicSamples);
      }
      c /= double(kHarmonicSamples);
      const double w = passing * m;
      weighted += 2.0 * std::norm(c) * w * w / (w * w + port.p_c * port.p_c);
    }
    g += port.strength() / P.length * weighted / total;
  }
  return g;
}

TrainState loaded_train(const Ring& ring, double bias) {
  const auto& P = ring.params;
  if (P.fluxons == 0) throw DomainError("loaded_train: no fluxons in the ring");
  bool capacitive = false;
  for (const auto& port : ring.ports) capacitive |= port.kind == PortKind::capacitive;
  if (!capacitive || bias == 0.0) {
    return velocity_for_bias(bias, P.length, P.fluxons, effective_damping(ring, 0.0));
  }

  const double direction = bias > 0.0 ? -1.0 : 1.0;
  auto excess = [&](double speed) {
    const double v = direction * speed;
    const double k = solve_modulus(P.length, P.fluxons, v);
    return std::abs(bias_for_velocity(v, k, effective_damping(ring, v))) - std::abs(bias);
  };
  double hi = 0.5;
  if (excess(hi) < 0.0) throw ConvergenceError("loaded_train: bias drives the train past v = 0.5");
  std::uintmax_t iters = 100;
  const auto [a, b] = boost::math::tools::toms748_solve(
      excess, 1e-9, hi, boost::math::tools::eps_tolerance<double>(40), iters);
  TrainState s = train_at_velocity(direction * 0.5 * (a + b), P.length, P.fluxons, 0.0);
  s.bias = bias;
  return s;
}

FieldState initialize(const Ring& ring, const TrainState& train) {
  FieldState s;
  s.phi.resize(ring.nodes);
  s.phi_t.resize(ring.nodes);
  s.port_aux.assign(ring.capacitive_ports, 0.0);
  s.winding = ring.params.fluxons;
  for (int i = 0; i < ring.nodes; ++i) {
    const auto d = fluxon_profile_derivatives(i * ring.dx, 0.0, train);
    s.phi[i] = d.phi;
    s.phi_t[i] = d.phi_t;
  }
  // Capacitive ports block the DC part of phi_t.
  const double dc = -2.0 * pi * ring.params.fluxons * train.v / ring.params.length;
  for (std::size_t j = 0; j < ring.ports.size(); ++j) {
    if (ring.aux_index[j] >= 0) s.port_aux[ring.aux_index[j]] = s.phi_t[ring.port_nodes[j]] - dc;
  }
  return s;
}

FieldState initialize(const Ring& ring, double bias) {
  if (ring.params.fluxons == 0) {
    if (std::abs(bias) > 1.0) throw DomainError("initialize: |i_b| > 1 has no static n = 0 state");
    FieldState s;
    s.phi.assign(ring.nodes, std::asin(bias));
    s.phi_t.assign(ring.nodes, 0.0);
    s.port_aux.assign(ring.capacitive_ports, 0.0);
    return s;
  }
  return initialize(ring, loaded_train(ring, bias));
}

void input_voltages(const Ring& ring, std::span<const DriveSpec> drives, double t, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& d : drives) {
    if (d.port < 0 || d.port >= static_cast<int>(ring.ports.size())) {
      throw DomainError("drive refers to port " + std::to_string(d.port) + " which does not exist");
    }
    out[d.port] += d.amplitude * std::cos(d.omega_d * t + d.phase);
  }
}

void rhs(const Ring& ring, double bias, std::span<const DriveSpec> drives, const FieldState& state,
         std::span<double> dphi, std::span<double> dphi_t, std::span<double> daux) {
  std::vector<double> v_in(ring.ports.size());
  input_voltages(ring, drives, state.t, v_in);
  std::vector<double> sin_phi(ring.nodes);
  derivative(ring, bias, v_in, state, dphi, dphi_t, daux, sin_phi);
}

void evolve(const Ring& ring, double bias, std::span<const DriveSpec> drives, FieldState& state,
            double duration, double dt, const StepObserver& observer, const EvolveOptions& options) {
  if (!(dt > 0.0) || dt > 0.5 * ring.dx * (1.0 + 1e-12)) {
    throw DomainError("evolve: dt = " + std::to_string(dt) + " violates dt <= dx/2 = " +
                      std::to_string(0.5 * ring.dx));
  }
  if (!(duration >= 0.0)) throw DomainError("evolve: negative duration");
  for (const auto& d : drives) {
    if (d.amplitude < 0.0 || !(d.omega_d > 0.0)) throw DomainError("evolve: invalid drive");
  }
  const long steps = std::lround(duration / dt);
  const int N = ring.nodes;
  const int A = ring.capacitive_ports;
  const std::size_t P = ring.ports.size();
  Workspace w(ring);
  std::vector<double> v_port(P), v_out(P), v_in_now(P);
  const double t0 = state.t;

  auto stage = [&](int s, const FieldState& y, double t) {
    input_voltages(ring, drives, t, w.v_in);
    derivative(ring, bias, w.v_in, y, w.k_phi[s], w.k_phit[s], w.k_aux[s], w.sin_phi);
  };
  // y_stage = y + h k, and y += sum c_s k_s; restrict-qualified so the loops vectorise.
  auto axpy = [N](double* __restrict out, const double* __restrict y, const double* __restrict k, double h) {
    for (int i = 0; i < N; ++i) out[i] = y[i] + h * k[i];
  };
  auto combine = [](double* __restrict y, const double* __restrict k0, const double* __restrict k1,
                    const double* __restrict k2, const double* __restrict k3, double c, int n) {
    for (int i = 0; i < n; ++i) y[i] += c * (k0[i] + 2.0 * (k1[i] + k2[i]) + k3[i]);
  };
  auto advance = [&](int s, double h) {
    axpy(w.stage.phi.data(), state.phi.data(), w.k_phi[s].data(), h);
    axpy(w.stage.phi_t.data(), state.phi_t.data(), w.k_phit[s].data(), h);
    for (int a = 0; a < A; ++a) w.stage.port_aux[a] = state.port_aux[a] + h * w.k_aux[s][a];
  };

  for (long n = 0; n < steps; ++n) {
    const double t = t0 + n * dt;
    stage(0, state, t);
    advance(0, 0.5 * dt);
    stage(1, w.stage, t + 0.5 * dt);
    advance(1, 0.5 * dt);
    stage(2, w.stage, t + 0.5 * dt);
    advance(2, dt);
    stage(3, w.stage, t + dt);
    const double c = dt / 6.0;
    combine(state.phi.data(), w.k_phi[0].data(), w.k_phi[1].data(), w.k_phi[2].data(), w.k_phi[3].data(), c, N);
    combine(state.phi_t.data(), w.k_phit[0].data(), w.k_phit[1].data(), w.k_phit[2].data(),
            w.k_phit[3].data(), c, N);
    combine(state.port_aux.data(), w.k_aux[0].data(), w.k_aux[1].data(), w.k_aux[2].data(), w.k_aux[3].data(),
            c, A);
    state.t = t0 + (n + 1) * dt;

    if ((n + 1) % options.check_every == 0 || n + 1 == steps) {
      check_finite(state, options.blowup);
      recentre(state);
    }
    if (observer) {
      input_voltages(ring, drives, state.t, v_in_now);
      for (std::size_t j = 0; j < P; ++j) {
        const int a = ring.aux_index[j];
        v_port[j] = a < 0 ? state.phi_t[ring.port_nodes[j]] : state.port_aux[a];
        v_out[j] = v_port[j] - v_in_now[j];
      }
      double mean = 0.0;
      for (int i = 0; i < N; ++i) mean += state.phi_t[i];
      observer(StepView{state.t, v_port, v_in_now, v_out, mean / N});
    }
  }
}

StepObserver ProbeRecord::recorder(int stride) {
  if (stride < 1) throw DomainError("probe stride must be >= 1");
  return [this, stride, count = 0L](const StepView& s) mutable {
    if (count++ % stride != 0) return;
    if (v_out.size() != s.v_out.size()) {
      v_out.assign(s.v_out.size(), {});
      v_in.assign(s.v_in.size(), {});
    }
    t.push_back(s.t);
    mean_phi_t.push_back(s.mean_phi_t);
    for (std::size_t j = 0; j < s.v_out.size(); ++j) {
      v_out[j].push_back(s.v_out[j]);
      v_in[j].push_back(s.v_in[j]);
    }
  };
}

double measure_dc_voltage(const ProbeRecord& probes, double t0, double t1, double volts_per_unit) {
  if (!(t1 > t0)) throw DomainError("measure_dc_voltage: empty window");
  const double mid = 0.5 * (t0 + t1);
  double s1 = 0.0, s2 = 0.0;
  long n1 = 0, n2 = 0;
  for (std::size_t i = 0; i < probes.t.size(); ++i) {
    const double t = probes.t[i];
    if (t < t0 || t > t1) continue;
    if (t < mid) {
      s1 += probes.mean_phi_t[i];
      ++n1;
    } else {
      s2 += probes.mean_phi_t[i];
      ++n2;
    }
  }
  if (n1 == 0 || n2 == 0) throw DomainError("measure_dc_voltage: window holds no samples");
  const double a1 = s1 / n1;
  const double a2 = s2 / n2;
  const double avg = (s1 + s2) / (n1 + n2);
  if (std::abs(a1 - a2) > 0.01 * std::abs(avg) + 1e-12) {
    throw ConvergenceError("measure_dc_voltage: window too short, half-window averages " +
                           std::to_string(a1) + " and " + std::to_string(a2));
  }
  return avg * volts_per_unit;
}

double energy(const Ring& ring, const FieldState& state) {
  const int N = ring.nodes;
  const double seam = 2.0 * pi * ring.params.fluxons;
  double e = 0.0;
  for (int i = 0; i < N; ++i) {
    const double right = i + 1 < N ? state.phi[i + 1] : state.phi[0] + seam;
    const double px = (right - state.phi[i]) / ring.dx;
    e += 0.5 * state.phi_t[i] * state.phi_t[i] + 0.5 * px * px + 1.0 - std::cos(state.phi[i]);
  }
  return e * ring.dx;
}

double measured_winding(const Ring& ring, const FieldState& state) {
  const int N = ring.nodes;
  const double seam = 2.0 * pi * state.winding;
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    const double right = i + 1 < N ? state.phi[i + 1] : state.phi[0] + seam;
    total += wrap(right - state.phi[i]);
  }
  return total / (2.0 * pi);
}

} // namespace fluxcirc
