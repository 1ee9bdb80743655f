#include "fluxcirc/tcm.hpp"

#include <algorithm>
#include <cmath>

#include "fluxcirc/spectrum.hpp"

namespace fluxcirc {
namespace {

cplx amplitude(double omega_d, const TcmParams& p, double turn) {
  const cplx i(0.0, 1.0);
  const cplx up = std::polar(1.0, turn) / (p.gamma_sigma + i * (omega_d - p.omega_plus));
  const cplx down = std::polar(1.0, -turn) / (p.gamma_sigma + i * (omega_d - p.omega_minus));
  return -2.0 / 3.0 * p.gamma_x * (up + down);
}

TcmResidual residual(const ScatterPoint& pt, const TcmParams& p) {
  const auto s = s_matrix(pt.omega_d, p);
  const int k = pt.drive_port;
  auto dev = [&](int shift) {
    const int j = (k + shift) % 3;
    return std::abs(std::abs(s[j][k]) - std::abs(pt.s[j]));
  };
  return {dev(0), dev(1), dev(2)};
}

} // namespace

void TcmParams::validate() const {
  if (!(gamma_x > 0.0)) throw DomainError("tcm: gamma_x must be positive");
  if (!(gamma_i >= 0.0)) throw DomainError("tcm: gamma_i must be non-negative");
  if (gamma_sigma != gamma_x + gamma_i) throw DomainError("tcm: gamma_sigma must equal gamma_x + gamma_i");
  if (!std::isfinite(omega_plus) || !std::isfinite(omega_minus)) throw DomainError("tcm: mode frequencies");
}

TcmParams make_tcm(double omega_plus, double omega_minus, double gamma_x, double gamma_i) {
  TcmParams p{omega_plus, omega_minus, gamma_x, gamma_i, gamma_x + gamma_i};
  p.validate();
  return p;
}

cplx s21(double omega_d, const TcmParams& p) { return amplitude(omega_d, p, pi / 3.0); }
cplx s31(double omega_d, const TcmParams& p) { return amplitude(omega_d, p, -pi / 3.0); }

cplx s11(double omega_d, const TcmParams& p) {
  const cplx i(0.0, 1.0);
  return -1.0 + 2.0 / 3.0 * p.gamma_x *
                    (1.0 / (p.gamma_sigma + i * (omega_d - p.omega_plus)) +
                     1.0 / (p.gamma_sigma + i * (omega_d - p.omega_minus)));
}

SMatrix s_matrix(double omega_d, const TcmParams& p) {
  const cplx row[3] = {s11(omega_d, p), s21(omega_d, p), s31(omega_d, p)};
  SMatrix s{};
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) s[j][k] = row[(j - k + 3) % 3];
  }
  return s;
}

TcmDesign design(double gamma_x, double gamma_i) {
  if (!(gamma_x > 0.0) || !(gamma_i >= 0.0)) throw DomainError("tcm design: need gamma_x > 0, gamma_i >= 0");
  return {2.0 * (gamma_x + gamma_i) / std::sqrt(3.0), 3.0 * gamma_x};
}

double external_rate(const Ring& ring) {
  double sum = 0.0;
  for (const auto& port : ring.ports) sum += port.strength();
  return sum / (2.0 * ring.params.length);
}

double external_rate(const Ring& ring, double omega) {
  double sum = 0.0;
  for (const auto& port : ring.ports) {
    double w = 1.0;
    if (port.kind == PortKind::capacitive) w = omega * omega / (omega * omega + port.p_c * port.p_c);
    sum += port.strength() * w;
  }
  return sum / (2.0 * ring.params.length);
}

double internal_rate(const JunctionParams& params) { return 0.5 * params.g; }

double port_frequency_shift(const Ring& ring, double omega) {
  if (!(omega > 0.0)) throw DomainError("port_frequency_shift: omega must be positive");
  double sum = 0.0;
  for (const auto& port : ring.ports) {
    if (port.kind == PortKind::capacitive) sum += port.strength() * port.p_c * omega * omega / (omega * omega + port.p_c * port.p_c);
  }
  return -sum / (2.0 * omega * ring.params.length);
}

TcmParams tcm_for_ring(const Ring& ring, double bias, int orientation) {
  if (orientation != 1 && orientation != -1) throw DomainError("tcm: orientation must be +1 or -1");
  const TrainState train = loaded_train(ring, bias);
  const Splitting sp = splitting(ring.params, train);
  double up = sp.omega_plus, down = sp.omega_minus;
  if (orientation < 0) std::swap(up, down);
  const double mean = 0.5 * (up + down);
  const double shift = port_frequency_shift(ring, mean);
  return make_tcm(up + shift, down + shift, external_rate(ring, mean), internal_rate(ring.params));
}

TcmReport compare_to_pde(const std::vector<ScatterPoint>& pde, const std::vector<TcmParams>& tcm) {
  if (pde.size() != tcm.size()) {
    throw DomainError("compare_to_pde: " + std::to_string(pde.size()) + " PDE points against " +
                      std::to_string(tcm.size()) + " TCM points");
  }
  TcmReport r;
  r.points.resize(pde.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pde.size(); ++i) {
    if (!pde[i].converged || pde[i].s.size() != 3) continue;
    const auto d = residual(pde[i], tcm[i]);
    r.points[i] = d;
    r.max_dev = std::max({r.max_dev, d.d11, d.d21, d.d31});
    sum += d.d11 + d.d21 + d.d31;
    ++r.compared;
  }
  if (r.compared > 0) r.mean_dev = sum / (3.0 * r.compared);
  return r;
}

int calibrate_orientation(const ScatterPoint& pde, const TcmParams& p) {
  if (pde.s.size() != 3) throw DomainError("calibrate_orientation: needs a three-port column");
  TcmParams swapped = p;
  std::swap(swapped.omega_plus, swapped.omega_minus);
  auto worst = [&](const TcmParams& q) {
    const auto d = residual(pde, q);
    return std::max({d.d11, d.d21, d.d31});
  };
  return worst(p) <= worst(swapped) ? 1 : -1;
}

} // namespace fluxcirc
