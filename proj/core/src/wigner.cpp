#include "rotorsim/wigner.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotorsim {

namespace {

const std::vector<double>& log_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kLogFactorialMax + 1, 0.0);
    for (int n = 1; n <= kLogFactorialMax; ++n) {
      t[n] = t[n - 1] + std::log(static_cast<double>(n));
    }
    return t;
  }();
  return table;
}

int parity_sign(int n) { return (n & 1) ? -1 : 1; }

void check_jm(int j, int m, const char* who) {
  if (j < 0) {
    throw std::invalid_argument(std::string(who) + ": negative j");
  }
  if (std::abs(m) > j) {
    throw std::invalid_argument(std::string(who) + ": |m| > j (j=" +
                                std::to_string(j) + ", m=" + std::to_string(m) +
                                ")");
  }
}

}  // namespace

double log_factorial(int n) {
  if (n < 0 || n > kLogFactorialMax) {
    throw std::invalid_argument("log_factorial: argument out of range: " +
                                std::to_string(n));
  }
  return log_factorial_table()[n];
}

double three_j(const ThreeJArgs& a) {
  return three_j(a.j1, a.j2, a.j3, a.m1, a.m2, a.m3);
}

double three_j(int j1, int j2, int j3, int m1, int m2, int m3) {
  check_jm(j1, m1, "three_j");
  check_jm(j2, m2, "three_j");
  check_jm(j3, m3, "three_j");

  if (m1 + m2 + m3 != 0) return 0.0;
  if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;

  const double pre =
      0.5 * (log_factorial(j1 + j2 - j3) + log_factorial(j1 - j2 + j3) +
             log_factorial(-j1 + j2 + j3) - log_factorial(j1 + j2 + j3 + 1) +
             log_factorial(j1 + m1) + log_factorial(j1 - m1) +
             log_factorial(j2 + m2) + log_factorial(j2 - m2) +
             log_factorial(j3 + m3) + log_factorial(j3 - m3));

  const int t_min = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int t_max = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});

  double sum = 0.0;
  for (int t = t_min; t <= t_max; ++t) {
    const double ln =
        pre - (log_factorial(t) + log_factorial(j3 - j2 + t + m1) +
               log_factorial(j3 - j1 + t - m2) +
               log_factorial(j1 + j2 - j3 - t) + log_factorial(j1 - t - m1) +
               log_factorial(j2 - t + m2));
    sum += parity_sign(t) * std::exp(ln);
  }
  return parity_sign(j1 - j2 - m3) * sum;
}

double wigner_small_d(int j, int m, int k, double theta) {
  check_jm(j, m, "wigner_small_d");
  check_jm(j, k, "wigner_small_d");

  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const double pre =
      0.5 * (log_factorial(j + m) + log_factorial(j - m) +
             log_factorial(j + k) + log_factorial(j - k));

  const int s_min = std::max(0, k - m);
  const int s_max = std::min(j + k, j - m);

  double sum = 0.0;
  for (int s_idx = s_min; s_idx <= s_max; ++s_idx) {
    const double ln =
        pre - (log_factorial(j + k - s_idx) + log_factorial(s_idx) +
               log_factorial(m - k + s_idx) + log_factorial(j - m - s_idx));
    const int pc = 2 * j + k - m - 2 * s_idx;  // power of cos(theta/2)
    const int ps = m - k + 2 * s_idx;          // power of sin(theta/2)
    sum += parity_sign(m - k + s_idx) * std::exp(ln) * std::pow(c, pc) *
           std::pow(s, ps);
  }
  return sum;
}

std::complex<double> wigner_D(int j, int m, int k, double phi, double theta,
                              double chi) {
  const double d = wigner_small_d(j, m, k, theta);
  return std::polar(1.0, -m * phi) * d * std::polar(1.0, -k * chi);
}

}  // namespace rotorsim
