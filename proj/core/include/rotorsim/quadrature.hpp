#pragma once

#include <complex>
#include <functional>
#include <vector>

// Numerical integration over the Euler angles with the volume element
// sin(theta) dtheta dphi dchi, phi and chi on [0, 2*pi), theta on [0, pi].
// Used as the independent oracle for analytic rotational matrix elements.

namespace rotorsim {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Nodes and weights of the n-point Gauss-Legendre rule, by Newton iteration
// on the Legendre recurrence.
GaussLegendreRule gauss_legendre(int n);

struct EulerQuadratureOptions {
  int theta_nodes;
  int phi_nodes;
  int chi_nodes;

  // Node counts exact for integrands band-limited at combined order j_band:
  // theta gets 2*j_band + 4 Gauss-Legendre nodes, phi/chi 2*j_band + 3
  // uniform nodes each.
  static EulerQuadratureOptions for_band_limit(int j_band);
};

using EulerFunction =
    std::function<std::complex<double>(double phi, double theta, double chi)>;

// Integral of f over the full Euler volume (8*pi^2 for f == 1).
std::complex<double> euler_quadrature(
    const EulerFunction& f,
    const EulerQuadratureOptions& opts = EulerQuadratureOptions::for_band_limit(24));

}  // namespace rotorsim
