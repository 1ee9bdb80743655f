#include "fluxcirc/elliptic.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "fluxcirc/constants.hpp"
#include "fluxcirc/errors.hpp"

namespace fluxcirc::elliptic {
namespace {

constexpr int kMaxAgmSteps = 64;
constexpr int kMaxSeriesTerms = 400;
// a - b cannot resolve below one ulp of a.
constexpr double kAgmTolerance = std::numeric_limits<double>::epsilon();

void check_modulus(double k) {
  if (!(k >= 0.0 && k < 1.0)) {
    throw DomainError("elliptic modulus must satisfy 0 <= k < 1, got " + std::to_string(k));
  }
}

void check_strip(complex u, const Modulus& m) {
  if (!std::isfinite(u.real()) || !std::isfinite(u.imag())) {
    throw DomainError("theta series argument must be finite");
  }
  if (std::abs(u.imag()) > m.Kc * (1.0 + 1e-12)) {
    throw DomainError("theta series argument outside |im u| <= K(k'): im u = " +
                      std::to_string(u.imag()));
  }
}

} // namespace

double complementary(double k) { return std::sqrt((1.0 - k) * (1.0 + k)); }

CompleteIntegrals complete_integrals(double k) {
  check_modulus(k);
  const double kc = complementary(k);

  if (k > 1.0 - kDegenerateCrossover) {
    const double lg = std::log(4.0 / kc);
    const double kc2 = kc * kc;
    return {lg + 0.25 * kc2 * (lg - 1.0), 1.0 + 0.5 * kc2 * (lg - 0.5)};
  }

  double a = 1.0;
  double b = kc;
  double c = k;
  double weight = 0.5; // 2^(n-1)
  double sum = weight * c * c;
  for (int n = 0; n < kMaxAgmSteps; ++n) {
    if (std::abs(c) <= kAgmTolerance * a) break;
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    c = 0.5 * (a - b);
    a = an;
    b = bn;
    weight *= 2.0;
    sum += weight * c * c;
  }
  const double K = pi / (2.0 * a);
  return {K, K * (1.0 - sum)};
}

Modulus::Modulus(double modulus) : k(modulus) {
  check_modulus(modulus);
  kc = complementary(k);
  const auto ke = complete_integrals(k);
  K = ke.K;
  E = ke.E;
  if (k == 0.0) {
    Kc = std::numeric_limits<double>::infinity();
    nome = 0.0;
  } else {
    Kc = complete_integrals(kc).K;
    nome = std::exp(-pi * Kc / K);
  }
}

JacobiFunctions jacobi(double u, double k) {
  check_modulus(k);
  if (!std::isfinite(u)) throw DomainError("jacobi: argument must be finite");

  std::array<double, kMaxAgmSteps + 1> a{};
  std::array<double, kMaxAgmSteps + 1> c{};
  a[0] = 1.0;
  c[0] = k;
  double b = complementary(k);
  int steps = 0;
  while (std::abs(c[steps]) > kAgmTolerance * a[steps]) {
    if (steps == kMaxAgmSteps) throw ConvergenceError("jacobi: AGM did not converge");
    a[steps + 1] = 0.5 * (a[steps] + b);
    c[steps + 1] = 0.5 * (a[steps] - b);
    b = std::sqrt(a[steps] * b);
    ++steps;
  }

  double phi = std::ldexp(a[steps] * u, steps);
  for (int n = steps; n > 0; --n) {
    phi = 0.5 * (phi + std::asin(c[n] / a[n] * std::sin(phi)));
  }
  const double sn = std::sin(phi);
  const double cn = std::cos(phi);
  const double kc = complementary(k);
  // kc^2 + k^2 cn^2 equals 1 - k^2 sn^2 but has no cancellation.
  const double dn = std::sqrt(kc * kc + k * k * cn * cn);
  return {phi, sn, cn, dn};
}

EtaTheta theta_eta(complex u, const Modulus& m, double tolerance) {
  check_strip(u, m);
  const double q = m.nome;
  const complex v = u * (pi / (2.0 * m.K));
  const double growth = std::abs(v.imag());

  // Theta(u) = theta_4(v, q)
  complex theta = 1.0;
  for (int n = 1; n < kMaxSeriesTerms; ++n) {
    const double qn = std::pow(q, double(n) * n);
    const double bound = 2.0 * qn * std::exp(2.0 * n * growth);
    if (bound <= tolerance * std::max(std::abs(theta), 1e-300)) break;
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    theta += 2.0 * sign * qn * std::cos(2.0 * double(n) * v);
  }

  // H(u) = theta_1(v, q)
  complex eta = 0.0;
  for (int n = 0; n < kMaxSeriesTerms; ++n) {
    const double e = n + 0.5;
    const double qn = std::pow(q, e * e);
    const double bound = 2.0 * qn * std::exp((2.0 * n + 1.0) * growth);
    if (bound <= tolerance * std::max(std::abs(eta), 1e-300)) break;
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    eta += 2.0 * sign * qn * std::sin((2.0 * n + 1.0) * v);
  }
  return {eta, theta};
}

EtaTheta theta_eta(complex u, double k) { return theta_eta(u, Modulus(k)); }

complex jacobi_zeta(complex u, const Modulus& m, double tolerance) {
  check_strip(u, m);
  const double q = m.nome;
  const complex v = u * (pi / (2.0 * m.K));
  const double growth = std::abs(v.imag());

  complex theta = 1.0;
  complex dtheta = 0.0; // d theta_4 / dv
  for (int n = 1; n < kMaxSeriesTerms; ++n) {
    const double qn = std::pow(q, double(n) * n);
    const double bound = 4.0 * n * qn * std::exp(2.0 * n * growth);
    if (bound <= tolerance * std::max({std::abs(theta), std::abs(dtheta), 1e-300})) break;
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    theta += 2.0 * sign * qn * std::cos(2.0 * double(n) * v);
    dtheta -= 4.0 * n * sign * qn * std::sin(2.0 * double(n) * v);
  }
  if (std::abs(theta) == 0.0) throw DomainError("jacobi_zeta: pole of Z at a zero of Theta");
  return dtheta / theta * (pi / (2.0 * m.K));
}

complex jacobi_zeta(complex u, double k) { return jacobi_zeta(u, Modulus(k)); }

} // namespace fluxcirc::elliptic
