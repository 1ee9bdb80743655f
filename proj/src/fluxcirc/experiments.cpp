#include "fluxcirc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>

#include <boost/math/tools/roots.hpp>

#include "fluxcirc/elliptic.hpp"
#include "fluxcirc/errors.hpp"
#include "fluxcirc/spectrum.hpp"

namespace fluxcirc {
namespace {

void say(const LogFn& log, const std::string& s) {
  if (log) log(s);
}

std::string label(const std::string& s) {
  std::string out = s;
  std::replace(out.begin(), out.end(), ',', ';');
  std::replace(out.begin(), out.end(), '\n', ' ');
  return out;
}

std::string port_name(int j, int k) { return "s" + std::to_string(j + 1) + std::to_string(k + 1); }

ResultTable make_table(const std::string& name, const ExperimentConfig& c, std::vector<std::string> columns) {
  ResultTable t;
  t.name = name;
  for (auto& [k, v] : c.echo()) t.add_meta(k, v);
  t.columns = std::move(columns);
  return t;
}

Ring ring_for(const JunctionParams& params, const ExperimentConfig& c, double capacitance) {
  return default_ring(params, c.numerics, capacitance);
}

std::vector<int> integer_grid(const std::vector<double>& g) {
  std::vector<int> out;
  for (double x : g) out.push_back(static_cast<int>(std::lround(x)));
  return out;
}

// Runs the grid on a ring built per point, keeping input order.
std::vector<ScatterPoint> run_points(const std::vector<Ring>& rings, const std::vector<double>& bias,
                                     const std::vector<DriveSpec>& drives, const Numerics& nm, int workers,
                                     const LogFn& log) {
  std::vector<ScatterPoint> out(drives.size());
  std::atomic<int> done{0};
  parallel_for(drives.size(), workers, [&](std::size_t i) {
    try {
      out[i] = s_column(rings[i], bias[i], drives[i], nm);
    } catch (const ScatterConvergenceError& e) {
      out[i] = e.point();
    } catch (const std::exception& e) {
      ScatterPoint p;
      p.drive_port = drives[i].port;
      p.omega_d = drives[i].omega_d;
      p.amplitude = drives[i].amplitude;
      p.bias = bias[i];
      p.s.assign(rings[i].ports.size(), cplx(std::nan(""), std::nan("")));
      p.error = e.what();
      out[i] = p;
    }
    const int n = ++done;
    say(log, "point " + std::to_string(n) + "/" + std::to_string(drives.size()) + " bias=" +
                 format_number(bias[i], 6) + " omega=" + format_number(drives[i].omega_d, 8) +
                 (out[i].converged ? "" : " (not converged)"));
  });
  return out;
}

int count_failed(const std::vector<ScatterPoint>& pts) {
  return static_cast<int>(std::count_if(pts.begin(), pts.end(), [](const ScatterPoint& p) { return !p.converged; }));
}

} // namespace

double resonance_omega(const JunctionParams& params) {
  return mode_frequency_static(1, params.fluxons, solve_modulus(params.length, params.fluxons, 0.0)).omega;
}

DcMeasurement pde_dc_voltage(const JunctionParams& params, double bias, int nodes, double transient,
                             double window) {
  if (!(window > 0.0)) throw DomainError("pde_dc_voltage: window must be positive");
  const Ring ring = make_ring(params, {}, nodes > 0 ? nodes : default_nodes(params.length));
  FieldState s = initialize(ring, bias);
  // The velocity relaxes on 1/g; start from the analytic train and allow a few of those.
  const double settle = transient > 0.0 ? transient : std::min(2000.0, 10.0 / std::max(params.g, 5e-3));
  const double dt = 0.25 * ring.dx;
  evolve(ring, bias, {}, s, settle, dt);
  double first = 0.0, second = 0.0;
  long n1 = 0, n2 = 0;
  const double mid = s.t + 0.5 * window;
  evolve(ring, bias, {}, s, window, dt, [&](const StepView& v) {
    if (v.t <= mid) {
      first += v.mean_phi_t;
      ++n1;
    } else {
      second += v.mean_phi_t;
      ++n2;
    }
  });
  DcMeasurement m;
  first /= std::max(1L, n1);
  second /= std::max(1L, n2);
  m.voltage = 0.5 * (first + second);
  m.drift = m.voltage != 0.0 ? std::abs(first - second) / std::abs(m.voltage) : 0.0;
  return m;
}

DesignPoint design_point(const Ring& ring) {
  const double target_rate_omega = resonance_omega(ring.params);
  auto delta = [&](double b) {
    const auto t = tcm_for_ring(ring, b);
    return std::abs(t.omega_plus - t.omega_minus);
  };
  const double target = design(external_rate(ring, target_rate_omega), internal_rate(ring.params)).delta_omega;
  double lo = 0.0, hi = 1e-8;
  for (int i = 0; i < 80 && delta(hi) < target; ++i) {
    lo = hi;
    hi *= 2.0;
  }
  if (delta(hi) < target) throw ConvergenceError("design_point: splitting never reaches the optimum");
  std::uintmax_t iters = 100;
  const auto r = boost::math::tools::toms748_solve([&](double b) { return delta(b) - target; }, lo, hi,
                                                   boost::math::tools::eps_tolerance<double>(40), iters);
  DesignPoint d;
  d.bias = 0.5 * (r.first + r.second);
  d.tcm = tcm_for_ring(ring, d.bias);
  d.omega_d = 0.5 * (d.tcm.omega_plus + d.tcm.omega_minus);
  return d;
}

double fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("fwhm: need matching grids of >= 3 points");
  const std::size_t peak = std::max_element(y.begin(), y.end()) - y.begin();
  const double half = 0.5 * y[peak];
  auto edge = [&](int step) {
    for (long i = static_cast<long>(peak); i + step >= 0 && i + step < static_cast<long>(y.size()); i += step) {
      const long j = i + step;
      if (y[j] < half) return x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    }
    return std::nan("");
  };
  return std::abs(edge(1) - edge(-1));
}

double first_crossing_below(const std::vector<double>& x, const std::vector<double>& y, double level) {
  if (x.size() != y.size()) throw DomainError("first_crossing_below: grid mismatch");
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (y[i - 1] >= level && y[i] < level) return x[i - 1] + (level - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1]);
  }
  return std::nan("");
}

int orientation_from(const std::vector<ScatterPoint>& pde, const std::vector<TcmParams>& tcm) {
  std::size_t best = pde.size();
  double contrast = -1.0;
  for (std::size_t i = 0; i < pde.size(); ++i) {
    if (!pde[i].converged || pde[i].s.size() != 3) continue;
    const int k = pde[i].drive_port;
    const double c = std::abs(std::abs(pde[i].s[(k + 1) % 3]) - std::abs(pde[i].s[(k + 2) % 3]));
    if (c > contrast) {
      contrast = c;
      best = i;
    }
  }
  return best < pde.size() ? calibrate_orientation(pde[best], tcm[best]) : 1;
}

std::vector<std::string> scatter_columns(int k) {
  std::vector<std::string> c = {"omega_d", "f_d_hz", "amplitude", "p_in_w", "p_in_dbm"};
  for (int j = 0; j < 3; ++j) {
    for (const char* part : {"_abs", "_re", "_im"}) c.push_back(port_name(j, k) + part);
  }
  for (int j = 0; j < 3; ++j) c.push_back("tcm_" + port_name(j, k) + "_abs");
  for (const char* s : {"sideband_norm", "velocity", "v_dc", "v_dc_volts", "p_diss_w", "transient", "window_length", "windows",
                        "window_change", "converged", "error"}) {
    c.push_back(s);
  }
  return c;
}

std::vector<Cell> scatter_cells(const ScatterPoint& pt, const JunctionParams& params, const SMatrix* tcm) {
  const double nan = std::nan("");
  std::vector<Cell> r = {pt.omega_d, pt.omega_d * params.plasma_frequency, pt.amplitude, pt.p_in,
                         pt.p_in > 0.0 ? watts_to_dbm(pt.p_in) : nan};
  for (int j = 0; j < 3; ++j) {
    const cplx s = j < static_cast<int>(pt.s.size()) ? pt.s[j] : cplx(nan, nan);
    r.insert(r.end(), {std::abs(s), s.real(), s.imag()});
  }
  for (int j = 0; j < 3; ++j) r.push_back(tcm ? std::abs((*tcm)[j][pt.drive_port]) : nan);
  r.insert(r.end(), {pt.sideband_norm, pt.velocity, pt.v_dc, pt.v_dc_volts, pt.p_diss, pt.transient, pt.window_length,
                     static_cast<double>(pt.windows), pt.window_change, pt.converged ? 1.0 : 0.0});
  r.push_back(label(pt.error));
  return r;
}

namespace {

std::vector<Cell> concat(std::vector<Cell> a, const std::vector<Cell>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Builds TCM rows with one orientation for the whole table.
std::vector<SMatrix> tcm_rows(const std::vector<ScatterPoint>& pts, const std::vector<TcmParams>& tcm) {
  const int o = orientation_from(pts, tcm);
  std::vector<SMatrix> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    TcmParams p = tcm[i];
    if (o < 0) std::swap(p.omega_plus, p.omega_minus);
    out.push_back(s_matrix(pts[i].omega_d, p));
  }
  return out;
}

void require_damping(const ExperimentConfig& c) {
  if (!(c.device.g > 0.0)) throw ConfigError("[device] " + c.experiment + " needs g > 0 to balance the bias");
}

ExperimentOutput run_iv(const ExperimentConfig& c, int workers, const LogFn& log) {
  require_damping(c);
  const auto ns = integer_grid(c.grid_or("fluxons", {2, 4, 6, 8}));
  const auto bias = c.grid_or("bias", parse_grid("0:0.3:31"));
  const bool pde = c.has("pde") && (c.settings.at("pde").find_first_of("1ty") != std::string::npos);
  const double window = c.number_or("duration", 400.0);
  ExperimentOutput out;
  auto t = make_table("iv", c,
                      {"fluxons", "bias", "v_dc", "v_dc_volts", "velocity", "modulus", "valid", "asymptote",
                       "pde_v_dc", "pde_rel_error", "pde_drift"});
  struct Job {
    int n;
    IvPoint p;
    DcMeasurement m;
  };
  std::vector<Job> jobs;
  for (int n : ns) {
    JunctionParams jp = c.device;
    jp.fluxons = n;
    for (const auto& p : iv_curve(jp, bias)) jobs.push_back({n, p, {std::nan(""), std::nan("")}});
  }
  if (pde) {
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
      JunctionParams jp = c.device;
      jp.fluxons = jobs[i].n;
      if (!jobs[i].p.valid) return;
      jobs[i].m = pde_dc_voltage(jp, jobs[i].p.bias, c.numerics.nodes, 0.0, window);
    });
    say(log, "iv: " + std::to_string(jobs.size()) + " PDE runs done");
  }
  for (const auto& j : jobs) {
    // The ring measures <phi_t> = -2 pi n v / L = -v_dc.
    const double rel = pde && j.p.voltage != 0.0 ? (j.m.voltage + j.p.voltage) / -j.p.voltage : std::nan("");
    t.add_row({static_cast<double>(j.n), j.p.bias, j.p.voltage, j.p.voltage * c.device.voltage_unit(),
               j.p.velocity, j.p.modulus, j.p.valid ? 1.0 : 0.0, 2.0 * pi * j.n / c.device.length, j.m.voltage, rel,
               j.m.drift});
  }
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentOutput run_spectrum(const ExperimentConfig& c) {
  const auto ns = integer_grid(c.grid_or("fluxons", parse_grid("2:20:19")));
  const int modes = c.integer_or("modes", 2);
  auto t = make_table("spectrum", c, {"fluxons", "ell", "omega", "f_hz", "omega_partner", "asymptote", "modulus"});
  for (int n : ns) {
    const double k = solve_modulus(c.device.length, n, 0.0);
    for (int ell = 1; ell <= modes && ell < n; ++ell) {
      const double w = mode_frequency_static(ell, n, k).omega;
      const double partner = mode_frequency_static(n - ell, n, k).omega;
      t.add_row({static_cast<double>(n), static_cast<double>(ell), w, w * c.device.plasma_frequency, partner,
                 2.0 * pi * ell / c.device.length, k});
    }
  }
  ExperimentOutput out;
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentOutput run_splitting(const ExperimentConfig& c) {
  require_damping(c);
  const auto bias = c.grid_or("bias", parse_grid("0:0.002:41"));
  auto t = make_table("splitting", c,
                      {"bias", "velocity", "modulus", "omega_minus", "omega_plus", "delta", "f_minus_hz", "f_plus_hz"});
  for (double b : bias) {
    const auto s = splitting(c.device, b);
    const double fp = c.device.plasma_frequency;
    t.add_row({b, s.train.v, s.train.k, s.omega_minus, s.omega_plus, s.delta, s.omega_minus * fp, s.omega_plus * fp});
  }
  ExperimentOutput out;
  out.tables.push_back(std::move(t));
  return out;
}

// Scatter table over (ring, bias, drive) triples with per-point TCM parameters.
ResultTable scatter_table(const std::string& name, const ExperimentConfig& c, std::vector<std::string> lead,
                          const std::vector<std::vector<Cell>>& lead_cells, const std::vector<ScatterPoint>& pts,
                          const std::vector<TcmParams>& tcm, const std::vector<JunctionParams>& params) {
  const int k = pts.empty() ? 0 : pts.front().drive_port;
  auto t = make_table(name, c, concat(std::move(lead), scatter_columns(k)));
  const auto s = tcm_rows(pts, tcm);
  for (std::size_t i = 0; i < pts.size(); ++i) t.add_row(concat(lead_cells[i], scatter_cells(pts[i], params[i], &s[i])));
  return t;
}

double amplitude_of(const ExperimentConfig& c) { return c.number_or("amplitude", kDefaultAmplitude); }

ExperimentOutput run_bias_sweep(const ExperimentConfig& c, int workers, const LogFn& log) {
  const auto bias = c.grid_or("bias", parse_grid("0:6e-4:13"));
  const Ring ring = ring_for(c.device, c, c.coupling_capacitance);
  const double w = c.number_or("omega", resonance_omega(c.device));
  const int port = c.integer_or("drive_port", 0);
  std::vector<DriveSpec> drives;
  std::vector<TcmParams> tcm;
  std::vector<std::vector<Cell>> lead;
  for (double b : bias) {
    drives.push_back({port, amplitude_of(c), w, 0.0});
    tcm.push_back(tcm_for_ring(ring, b));
    lead.push_back({b});
  }
  const auto pts = run_points(std::vector<Ring>(bias.size(), ring), bias, drives, c.numerics, workers, log);
  ExperimentOutput out;
  out.failed_points = count_failed(pts);
  out.tables.push_back(
      scatter_table("bias-sweep", c, {"bias"}, lead, pts, tcm, std::vector<JunctionParams>(pts.size(), c.device)));
  return out;
}

ExperimentOutput run_freq_sweep(const ExperimentConfig& c, int workers, const LogFn& log) {
  // Default overlay: the neighbouring fluxon numbers on the same drive axis.
  const double n0 = c.device.fluxons;
  const auto ns = integer_grid(c.grid_or("fluxons", n0 > 1 ? std::vector<double>{n0 - 1, n0, n0 + 1}
                                                            : std::vector<double>{n0, n0 + 1}));
  const double b = c.number_or("bias", 3e-4);
  std::vector<double> omegas;
  if (c.has("omega")) {
    omegas = c.grid("omega");
  } else {
    const double w1 = resonance_omega(c.device);
    for (double d : c.grid_or("detuning", parse_grid("-0.04:0.04:33"))) omegas.push_back(w1 * (1.0 + d));
  }
  std::vector<Ring> rings;
  std::vector<double> biases;
  std::vector<DriveSpec> drives;
  std::vector<TcmParams> tcm;
  std::vector<JunctionParams> params;
  std::vector<std::vector<Cell>> lead;
  for (int n : ns) {
    JunctionParams jp = c.device;
    jp.fluxons = n;
    const Ring ring = ring_for(jp, c, c.coupling_capacitance);
    const TcmParams tp = tcm_for_ring(ring, b);
    const double w1 = resonance_omega(jp);
    for (double w : omegas) {
      rings.push_back(ring);
      biases.push_back(b);
      drives.push_back({c.integer_or("drive_port", 0), amplitude_of(c), w, 0.0});
      tcm.push_back(tp);
      params.push_back(jp);
      lead.push_back({static_cast<double>(n), b, w1, (w - w1) / w1});
    }
  }
  const auto pts = run_points(rings, biases, drives, c.numerics, workers, log);
  ExperimentOutput out;
  out.failed_points = count_failed(pts);
  auto t = scatter_table("freq-sweep", c, {"fluxons", "bias", "omega_res", "detuning"}, lead, pts, tcm, params);
  // FWHM of the forward amplitude per fluxon number.
  for (int n : ns) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (params[i].fluxons != n || !pts[i].converged) continue;
      x.push_back(pts[i].omega_d);
      y.push_back(std::abs(pts[i].s[(pts[i].drive_port + 1) % 3]));
    }
    if (x.size() >= 3) {
      const double width = fwhm(x, y);
      t.add_meta("fwhm.n" + std::to_string(n), format_number(width) + " (" +
                                                   format_number(width * c.device.plasma_frequency) + " Hz)");
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentOutput run_loss(const ExperimentConfig& c, bool quasiparticle, int workers, const LogFn& log) {
  const std::string key = quasiparticle ? "g" : "p";
  const auto values = c.grid_or(key, quasiparticle ? parse_grid("0:0.008:9") : parse_grid("0,1e-6,1e-5,1e-4,1e-3"));
  std::vector<Ring> rings;
  std::vector<double> biases;
  std::vector<DriveSpec> drives;
  std::vector<TcmParams> tcm;
  std::vector<JunctionParams> params;
  std::vector<std::vector<Cell>> lead;
  for (double v : values) {
    JunctionParams jp = c.device;
    (quasiparticle ? jp.g : jp.p) = v;
    const Ring ring = ring_for(jp, c, c.coupling_capacitance);
    double b = c.number_or("bias", 3e-4);
    double w = c.number_or("omega", resonance_omega(jp));
    TcmParams tp;
    if (quasiparticle) {
      // Each loss gets its own optimal splitting.
      const auto d = design_point(ring);
      b = d.bias;
      w = d.omega_d;
      tp = d.tcm;
    } else {
      tp = tcm_for_ring(ring, b);
    }
    rings.push_back(ring);
    biases.push_back(b);
    drives.push_back({0, amplitude_of(c), w, 0.0});
    tcm.push_back(tp);
    params.push_back(jp);
    lead.push_back({v, tp.gamma_x, tp.gamma_i, b});
  }
  const auto pts = run_points(rings, biases, drives, c.numerics, workers, log);
  ExperimentOutput out;
  out.failed_points = count_failed(pts);
  out.tables.push_back(scatter_table(quasiparticle ? "loss-g" : "loss-p", c, {key, "gamma_x", "gamma_i", "bias"},
                                     lead, pts, tcm, params));
  return out;
}

ExperimentOutput run_power(const ExperimentConfig& c, int workers, const LogFn& log) {
  const auto dbm = c.grid_or("power_dbm", parse_grid("-120:-80:9"));
  const Ring ring = ring_for(c.device, c, c.coupling_capacitance);
  const double b = c.number_or("bias", 3e-4);
  const double w = c.number_or("omega", resonance_omega(c.device));
  const TcmParams tp = tcm_for_ring(ring, b);
  std::vector<DriveSpec> drives;
  std::vector<std::vector<Cell>> lead;
  for (double p : dbm) {
    drives.push_back({0, amplitude_for_power(c.device, dbm_to_watts(p)), w, 0.0});
    lead.push_back({p, b});
  }
  const auto pts = run_points(std::vector<Ring>(dbm.size(), ring), std::vector<double>(dbm.size(), b), drives,
                              c.numerics, workers, log);
  ExperimentOutput out;
  out.failed_points = count_failed(pts);
  auto t = scatter_table("power", c, {"power_dbm", "bias"}, lead, pts, std::vector<TcmParams>(pts.size(), tp),
                         std::vector<JunctionParams>(pts.size(), c.device));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    x.push_back(dbm[i]);
    y.push_back(std::abs(pts[i].s[1]));
  }
  if (!y.empty()) {
    t.add_meta("small_signal_s21", format_number(y.front()));
    t.add_meta("p1db_dbm", format_number(first_crossing_below(x, y, std::pow(10.0, -1.0 / 20.0) * y.front())));
  }
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentOutput run_fluxon_sweep(const ExperimentConfig& c, int workers, const LogFn& log) {
  const auto ns = integer_grid(c.grid_or("fluxons", parse_grid("4:15:12")));
  const int refine = c.integer_or("refine", 0);
  std::vector<Ring> rings;
  std::vector<double> biases;
  std::vector<DriveSpec> drives;
  std::vector<TcmParams> tcm;
  std::vector<JunctionParams> params;
  std::vector<std::vector<Cell>> lead;
  for (int n : ns) {
    JunctionParams jp = c.device;
    jp.fluxons = n;
    const Ring ring = ring_for(jp, c, c.coupling_capacitance);
    const auto d = design_point(ring);
    for (int m = -refine; m <= refine; ++m) {
      const double b = d.bias * std::pow(1.15, m);
      rings.push_back(ring);
      biases.push_back(b);
      drives.push_back({0, amplitude_of(c), d.omega_d, 0.0});
      tcm.push_back(tcm_for_ring(ring, b));
      params.push_back(jp);
      lead.push_back({static_cast<double>(n), b, d.bias});
    }
  }
  const auto pts = run_points(rings, biases, drives, c.numerics, workers, log);
  ExperimentOutput out;
  out.failed_points = count_failed(pts);
  auto t = scatter_table("fluxon-sweep", c, {"fluxons", "bias", "design_bias"}, lead, pts, tcm, params);
  t.columns.push_back("best");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool best = pts[i].converged;
    for (std::size_t j = 0; j < pts.size() && best; ++j) {
      if (j != i && params[j].fluxons == params[i].fluxons && pts[j].converged &&
          std::abs(pts[j].s[1]) > std::abs(pts[i].s[1])) {
        best = false;
      }
    }
    t.rows[i].push_back(best ? 1.0 : 0.0);
  }
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentOutput run_coupling(const ExperimentConfig& c, int workers, const LogFn& log) {
  const auto caps = c.grid_or("capacitance", {0.0, 237e-15, 474e-15});
  const auto det = c.grid_or("detuning", parse_grid("-0.02:0.02:41"));
  const double w1 = resonance_omega(c.device);
  std::vector<Ring> rings;
  std::vector<double> biases;
  std::vector<DriveSpec> drives;
  std::vector<TcmParams> tcm;
  std::vector<std::vector<Cell>> lead;
  for (double cc : caps) {
    const Ring ring = ring_for(c.device, c, cc);
    const auto d = design_point(ring);
    for (double x : det) {
      rings.push_back(ring);
      biases.push_back(d.bias);
      drives.push_back({0, amplitude_of(c), w1 * (1.0 + x), 0.0});
      tcm.push_back(d.tcm);
      lead.push_back({cc, d.bias, x});
    }
  }
  const auto pts = run_points(rings, biases, drives, c.numerics, workers, log);
  ExperimentOutput out;
  out.failed_points = count_failed(pts);
  out.tables.push_back(scatter_table("coupling-compare", c, {"capacitance", "bias", "detuning"}, lead, pts, tcm,
                                     std::vector<JunctionParams>(pts.size(), c.device)));
  auto opt = make_table("coupling-compare-optima", c,
                        {"capacitance", "bias", "detuning", "s11_abs", "s21_abs", "s31_abs", "fwhm_hz"});
  for (std::size_t g = 0; g < caps.size(); ++g) {
    std::size_t best = det.size();
    std::vector<double> x, y;
    for (std::size_t i = 0; i < det.size(); ++i) {
      const auto& p = pts[g * det.size() + i];
      if (!p.converged) continue;
      x.push_back(p.omega_d);
      y.push_back(std::abs(p.s[1]));
      if (best == det.size() || std::abs(p.s[1]) > std::abs(pts[g * det.size() + best].s[1])) best = i;
    }
    if (best == det.size()) continue;
    const auto& p = pts[g * det.size() + best];
    const double width = x.size() >= 3 ? fwhm(x, y) * c.device.plasma_frequency : std::nan("");
    opt.add_row({caps[g], biases[g * det.size()], det[best], std::abs(p.s[0]), std::abs(p.s[1]), std::abs(p.s[2]),
                 width});
  }
  out.tables.push_back(std::move(opt));
  return out;
}

} // namespace

ExperimentOutput run_experiment(const ExperimentConfig& c, int workers, const LogFn& log) {
  const int w = workers > 0 ? workers : (c.workers > 0 ? c.workers : default_workers());
  const auto start = std::chrono::steady_clock::now();
  say(log, "experiment " + c.experiment + " with " + std::to_string(w) + " worker(s)");
  ExperimentOutput out;
  const auto& e = c.experiment;
  if (e == "iv") {
    out = run_iv(c, w, log);
  } else if (e == "spectrum") {
    out = run_spectrum(c);
  } else if (e == "splitting") {
    out = run_splitting(c);
  } else if (e == "bias-sweep") {
    out = run_bias_sweep(c, w, log);
  } else if (e == "freq-sweep") {
    out = run_freq_sweep(c, w, log);
  } else if (e == "loss-g") {
    out = run_loss(c, true, w, log);
  } else if (e == "loss-p") {
    out = run_loss(c, false, w, log);
  } else if (e == "power") {
    out = run_power(c, w, log);
  } else if (e == "fluxon-sweep") {
    out = run_fluxon_sweep(c, w, log);
  } else if (e == "coupling-compare") {
    out = run_coupling(c, w, log);
  } else if (e == "validate") {
    out = run_validation(log);
  } else {
    throw ConfigError("unknown experiment '" + e + "'");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (auto& t : out.tables) {
    t.add_meta("code_version", "fluxcirc 0.3.0");
    t.add_meta("wall_time_s", format_number(secs, 6));
    t.add_meta("failed_points", std::to_string(out.failed_points));
  }
  return out;
}

ExperimentOutput run_validation(const LogFn& log) {
  ExperimentOutput out;
  ResultTable t;
  t.name = "validate";
  t.columns = {"check", "value", "limit", "status"};
  auto check = [&](const std::string& name, double value, double limit) {
    const bool ok = std::isfinite(value) && value <= limit;
    out.checks_passed &= ok;
    const std::string line = std::string(ok ? "PASS" : "FAIL") + " " + name + " = " + format_number(value, 4) +
                             " (limit " + format_number(limit, 3) + ")";
    out.report.push_back(line);
    say(log, line);
    t.add_row({name, value, limit, std::string(ok ? "PASS" : "FAIL")});
  };
  auto guarded = [&](const std::string& name, double limit, const std::function<double()>& fn) {
    double v = std::nan("");
    try {
      v = fn();
    } catch (const std::exception& e) {
      say(log, name + ": " + e.what());
    }
    check(name, v, limit);
  };

  guarded("elliptic.dn2_plus_k2sn2", 1e-12, [] {
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 25; ++j) {
        const double k = 0.02 + 0.96 * j / 24.0;
        const auto f = elliptic::jacobi(-6.0 + 12.0 * i / 39.0, k);
        worst = std::max(worst, std::abs(f.dn * f.dn + k * k * f.sn * f.sn - 1.0));
      }
    }
    return worst;
  });
  guarded("elliptic.legendre_relation", 1e-13, [] {
    double worst = 0.0;
    for (double k : {0.1, 0.5, 0.9, 0.999}) {
      const elliptic::Modulus m(k);
      const auto c = elliptic::complete_integrals(m.kc);
      worst = std::max(worst, std::abs(m.E * m.Kc + c.E * m.K - m.K * m.Kc - pi / 2));
    }
    return worst;
  });
  guarded("spectrum.f_res_rel_error", 0.01, [] {
    JunctionParams jp;
    return std::abs(resonance_omega(jp) * jp.plasma_frequency / 7.53e9 - 1.0);
  });
  guarded("spectrum.lame_oracle_rel_error", 1e-3, [] {
    const double k = solve_modulus(15.0, 8, 0.0);
    const auto ev = lame_matrix_oracle(k, 15.0, 8, 4096, 9);
    double worst = 0.0;
    for (int ell = 1; ell <= 7; ++ell) {
      const double w = mode_frequency_static(ell, 8, k).omega;
      double nearest = INFINITY;
      for (double e : ev) nearest = std::min(nearest, std::abs(e - w));
      worst = std::max(worst, nearest / w);
    }
    return worst;
  });
  guarded("sgpde.lc_oracle_abs_error", 1e-3, [] {
    JunctionParams jp;
    jp.length = 1.0;
    jp.fluxons = 0;
    jp.z_ljj = 0.3 * jp.z0;
    const auto ring = make_ring(jp, {galvanic_port(0.0, 0.3)}, 1, true);
    Numerics nm;
    nm.dt_factor = 0.04;
    nm.demod_periods = 32;
    nm.transient_periods = 20;
    double worst = 0.0;
    for (double w : {0.8, 1.0, 1.3}) {
      const auto p = s_column(ring, 0.0, {0, 1e-5, w, 0.0}, nm);
      worst = std::max(worst, std::abs(p.s[0] - lc_reflection_galvanic(w, 1.0, 1.0, 1.0 / 0.3)));
    }
    return worst;
  });
  guarded("sgpde.energy_drift_rel", 1e-6, [] {
    JunctionParams jp;
    jp.length = 15;
    const auto ring = make_ring(jp, {}, 300);
    FieldState s = initialize(ring, train_at_velocity(0.3, 15, 8, 0.0));
    const double e0 = energy(ring, s);
    evolve(ring, 0.0, {}, s, 1000.0, 0.25 * ring.dx);
    return std::abs(energy(ring, s) - e0) / e0;
  });
  guarded("sgpde.winding_change", 1e-9, [] {
    JunctionParams jp;
    jp.length = 10;
    jp.fluxons = 3;
    jp.g = 0.05;
    const auto ring = make_ring(jp, symmetric_ports(jp), 201);
    const DriveSpec d[] = {{0, 0.3, 0.5, 0.0}, {1, 0.2, 0.9, 1.0}};
    FieldState s = initialize(ring, 0.05);
    evolve(ring, 0.05, d, s, 200.0, 0.25 * ring.dx);
    return std::abs(measured_winding(ring, s) - 3.0);
  });
  guarded("scattering.lossless_norm_error", 0.02, [] {
    JunctionParams jp;
    jp.length = 10;
    jp.fluxons = 4;
    const auto ring = make_ring(jp, symmetric_ports(jp), 201);
    const auto p = s_column(ring, 0.0, {0, kDefaultAmplitude, resonance_omega(jp), 0.0});
    return std::abs(std::norm(p.s[0]) + std::norm(p.s[1]) + std::norm(p.s[2]) - 1.0);
  });
  guarded("tcm.lossless_unitarity", 1e-10, [] {
    const auto p = make_tcm(1.001, 0.999, 0.0021, 0.0);
    double worst = 0.0;
    for (double w : {0.99, 1.0, 1.003}) {
      const auto s = s_matrix(w, p);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          cplx e = 0.0;
          for (int k = 0; k < 3; ++k) e += std::conj(s[k][i]) * s[k][j];
          worst = std::max(worst, std::abs(e - (i == j ? 1.0 : 0.0)));
        }
      }
    }
    return worst;
  });
  out.tables.push_back(std::move(t));
  return out;
}

} // namespace fluxcirc
