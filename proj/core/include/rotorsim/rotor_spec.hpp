#pragma once

#include <array>
#include <optional>

#include "rotorsim/basis.hpp"

namespace rotorsim {

// Molecular parameters in internal units (rad/ps). Rotational constants
// follow the A <= B <= C convention; field-coupling scales (mu0, alpha,
// beta) are taken directly as interaction strengths so that e.g. the
// orienting term is -mu0 * E_K * cos(theta_zK) with E in the caller's
// field unit.
struct RotorSpec {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double mu0 = 0.0;
  double alpha_par = 0.0;
  double alpha_perp = 0.0;
  double beta_par = 0.0;
  double beta_perp = 0.0;
  std::optional<double> centrifugal_D;       // linear rotors only
  std::array<double, 2> spin_weights{1.0, 1.0};  // index by j % 2

  double delta_alpha() const { return alpha_par - alpha_perp; }
  double spin_weight(int j) const { return spin_weights[j & 1]; }

  // Throws std::invalid_argument if the constants are inconsistent with the
  // given top class (ordering, positivity, equality requirements, stray
  // centrifugal term).
  void validate(TopClass top) const;
};

// Classification from the constants alone (A <= B <= C required); equality
// is judged within rel_tol of C.
TopClass classify_top(double A, double B, double C, double rel_tol = 1e-12);

}  // namespace rotorsim
