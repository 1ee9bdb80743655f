#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fluxcirc/fluxon.hpp"

namespace fluxcirc {

enum class PortKind { galvanic, capacitive };

/// Waveguide port attached at one node. Galvanic ports use z; capacitive
/// ports use g_C = Z_LJJ/Z_C and p_C = Z_C/Z0, with Z_C = 1/(omega_p C_C).
struct PortConfig {
  double position = 0.0;
  PortKind kind = PortKind::galvanic;
  double z = 0.0;
  double g_c = 0.0;
  double p_c = 0.0;

  /// Coupling of the port to the ring seen by the phase, g_C p_C or z.
  double strength() const { return kind == PortKind::galvanic ? z : g_c * p_c; }
};

PortConfig galvanic_port(double position, double z);
PortConfig capacitive_port(double position, const JunctionParams& params, double capacitance);

/// Ports at 0, L/3, 2L/3 (galvanic with the device z unless capacitance > 0).
std::vector<PortConfig> symmetric_ports(const JunctionParams& params, int count = 3,
                                        double capacitance = 0.0);

struct DriveSpec {
  int port = 0;
  double amplitude = 0.0;
  double omega_d = 0.0;
  double phase = 0.0;
};

/// Discretised ring: device, ports and grid. Built once, shared read-only.
struct Ring {
  JunctionParams params;
  std::vector<PortConfig> ports;
  int nodes = 0;
  double dx = 0.0;
  std::vector<int> port_nodes;
  int capacitive_ports = 0;
  std::vector<int> aux_index; // per port: slot in port_aux, or -1
};

/// Throws DomainError on N < 20 L, coincident ports, or bad port constants.
/// lumped = true builds the single-node circuit (N = 1), where the ring is
/// one LC tank with C = 1 and L = 1 in the small-signal limit.
Ring make_ring(const JunctionParams& params, std::vector<PortConfig> ports, int nodes, bool lumped = false);

/// Smallest multiple of `multiple` with at least `per_unit` nodes per lambda_J.
int default_nodes(double length, double per_unit = 20.0, int multiple = 3);

struct FieldState {
  std::vector<double> phi;
  std::vector<double> phi_t;
  std::vector<double> port_aux; // waveguide voltage at each capacitive port
  double t = 0.0;
  int winding = 0;
};

/// Fluxon friction from the g term plus the time-averaged port load on the
/// unperturbed train moving at v. Capacitive ports only pass the AC part.
double effective_damping(const Ring& ring, double v);

/// Train that balances i_b against effective_damping.
TrainState loaded_train(const Ring& ring, double bias);

/// Samples the analytic train for i_b (at the loaded velocity) on the grid.
FieldState initialize(const Ring& ring, double bias);
/// Samples a given train.
FieldState initialize(const Ring& ring, const TrainState& train);

/// Time derivative of (phi, phi_t, port_aux), written into the three spans.
void rhs(const Ring& ring, double bias, std::span<const DriveSpec> drives, const FieldState& state,
         std::span<double> dphi, std::span<double> dphi_t, std::span<double> daux);

/// Input voltage at each port at time t.
void input_voltages(const Ring& ring, std::span<const DriveSpec> drives, double t, std::span<double> out);

/// One sample of the port signals after a completed step.
struct StepView {
  double t;
  std::span<const double> v_port; // phi_t at galvanic ports, V_wg at capacitive ones
  std::span<const double> v_in;
  std::span<const double> v_out;  // v_port - v_in
  double mean_phi_t;
};

using StepObserver = std::function<void(const StepView&)>;

struct EvolveOptions {
  double blowup = 1e3;
  int check_every = 64;
};

/// Fixed-step RK4 over `duration`; dt must satisfy dt <= dx/2.
void evolve(const Ring& ring, double bias, std::span<const DriveSpec> drives, FieldState& state,
            double duration, double dt, const StepObserver& observer = {},
            const EvolveOptions& options = {});

/// Records every `stride`-th step.
struct ProbeRecord {
  std::vector<double> t;
  std::vector<double> mean_phi_t;
  std::vector<std::vector<double>> v_out; // [port][sample]
  std::vector<std::vector<double>> v_in;

  StepObserver recorder(int stride = 1);
};

/// Time average of the spatially averaged phi_t over [t0, t1] in volts.
/// Throws ConvergenceError if the two half-window averages differ by > 1%.
double measure_dc_voltage(const ProbeRecord& probes, double t0, double t1, double volts_per_unit);

/// Discrete SG energy sum(1/2 phi_t^2 + 1/2 phi_x^2 + 1 - cos phi) dx.
double energy(const Ring& ring, const FieldState& state);

/// Sum of wrapped neighbour differences over the ring, divided by 2 pi.
double measured_winding(const Ring& ring, const FieldState& state);

} // namespace fluxcirc
