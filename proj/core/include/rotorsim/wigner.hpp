#pragma once

#include <complex>

// Angular momentum primitives: Wigner 3-j symbols and rotation matrix
// elements for integer quantum numbers.
//
// Conventions (zyz Euler angles, passive rotation of the frame):
//   D^j_{mk}(phi, theta, chi) = exp(-i m phi) d^j_{mk}(theta) exp(-i k chi)
// with the real small-d function from the standard factorial sum, so that
// d^1_{00}(theta) = cos(theta) and d^1_{10}(pi/2) = -1/sqrt(2).

namespace rotorsim {

struct ThreeJArgs {
  int j1, j2, j3;
  int m1, m2, m3;
};

// log(n!) for 0 <= n <= kLogFactorialMax; table-backed, precomputed once.
// Supports 3-j evaluation up to j ~ 250 (well past the documented j cap of 64).
inline constexpr int kLogFactorialMax = 1024;
double log_factorial(int n);

// Racah-formula 3-j symbol. Selection-rule failures (m1+m2+m3 != 0, triangle
// violation) return exactly 0. Negative j or |m| > j throw std::invalid_argument.
double three_j(const ThreeJArgs& args);
double three_j(int j1, int j2, int j3, int m1, int m2, int m3);

// Real small-d rotation matrix element d^j_{mk}(theta).
double wigner_small_d(int j, int m, int k, double theta);

// Full rotation matrix element D^j_{mk}(phi, theta, chi).
std::complex<double> wigner_D(int j, int m, int k, double phi, double theta,
                              double chi);

}  // namespace rotorsim
