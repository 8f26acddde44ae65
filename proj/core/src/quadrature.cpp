#include "rotorsim/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "rotorsim/constants.hpp"

namespace rotorsim {

GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n(x).
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

EulerQuadratureOptions EulerQuadratureOptions::for_band_limit(int j_band) {
  if (j_band < 0) throw std::invalid_argument("for_band_limit: j_band < 0");
  return EulerQuadratureOptions{2 * j_band + 4, 2 * j_band + 3, 2 * j_band + 3};
}

std::complex<double> euler_quadrature(const EulerFunction& f,
                                      const EulerQuadratureOptions& opts) {
  if (opts.theta_nodes < 1 || opts.phi_nodes < 1 || opts.chi_nodes < 1) {
    throw std::invalid_argument("euler_quadrature: node counts must be >= 1");
  }
  const GaussLegendreRule gl = gauss_legendre(opts.theta_nodes);

  // x = cos(theta) absorbs the sin(theta) volume factor.
  const double dphi = kTwoPi / opts.phi_nodes;
  const double dchi = kTwoPi / opts.chi_nodes;

  std::complex<double> total = 0.0;
  for (int it = 0; it < opts.theta_nodes; ++it) {
    const double theta = std::acos(gl.nodes[it]);
    const double wt = gl.weights[it];
    std::complex<double> slab = 0.0;
    for (int ip = 0; ip < opts.phi_nodes; ++ip) {
      const double phi = dphi * ip;
      for (int ic = 0; ic < opts.chi_nodes; ++ic) {
        slab += f(phi, theta, dchi * ic);
      }
    }
    total += wt * slab;
  }
  return total * dphi * dchi;
}

}  // namespace rotorsim
