#pragma once

#include <complex>

// Complete elliptic integrals, Jacobi elliptic functions and the Jacobi
// theta/eta/zeta functions (Whittaker-Watson normalisation, real modulus).
//
// All functions are pure. Arguments are validated and out-of-domain input
// raises fluxcirc::DomainError.

namespace fluxcirc::elliptic {

using complex = std::complex<double>;

/// Above k = 1 - kDegenerateCrossover, K and E switch from the AGM to the
/// logarithmic expansion about k = 1 (dropped terms are O(k'^4 log k')).
inline constexpr double kDegenerateCrossover = 1e-8;

/// Nome series stop once the bound on the next term falls below this
/// fraction of the partial sum.
inline constexpr double kSeriesTolerance = 1e-16;

struct CompleteIntegrals {
  double K;
  double E;
};

/// K(k) and E(k) by the arithmetic-geometric mean. Requires 0 <= k < 1.
CompleteIntegrals complete_integrals(double k);

/// sqrt(1 - k^2) without cancellation near k = 1.
double complementary(double k);

/// Everything derived from a real modulus that the theta series need.
struct Modulus {
  double k = 0.0;
  double kc = 1.0;   // complementary modulus
  double nome = 0.0; // q = exp(-pi K'/K)
  double K = 0.0;
  double Kc = 0.0;   // K(kc); +inf at k = 0
  double E = 0.0;

  explicit Modulus(double modulus);
};

struct JacobiFunctions {
  double am;
  double sn;
  double cn;
  double dn;
};

/// am, sn, cn, dn for real u by descending Landen (AGM) transformation.
JacobiFunctions jacobi(double u, double k);

struct EtaTheta {
  complex eta;   // H(u)
  complex theta; // Theta(u)
};

/// H(u) and Theta(u). |im u| must not exceed K(kc).
EtaTheta theta_eta(complex u, const Modulus& m, double tolerance = kSeriesTolerance);
EtaTheta theta_eta(complex u, double k);

/// Z(u) = Theta'(u) / Theta(u). |im u| must not exceed K(kc).
complex jacobi_zeta(complex u, const Modulus& m, double tolerance = kSeriesTolerance);
complex jacobi_zeta(complex u, double k);

} // namespace fluxcirc::elliptic
