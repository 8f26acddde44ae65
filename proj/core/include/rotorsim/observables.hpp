#pragma once

#include <string>
#include <vector>

#include "rotorsim/dynamics.hpp"
#include "rotorsim/operators.hpp"

namespace rotorsim {

// Tr[rho op] / <psi|op|psi>; real by Hermiticity. Throws on basis mismatch.
double expectation(const Operator& op, const QuantumState& state);

struct AlignmentRecord {
  double cos_x = 0.0, cos_y = 0.0, cos_z = 0.0;
  double cos2_x = 0.0, cos2_y = 0.0, cos2_z = 0.0;
  double energy = 0.0;  // <H0>, rad/ps
  double j2 = 0.0;      // <J^2>
  double sum_rule_residual() const { return cos2_x + cos2_y + cos2_z - 1.0; }
  bool planar(double threshold = 0.1) const;
  bool oriented(double threshold = 0.9) const;
};

// Precomputed operator set for repeated evaluation over one basis.
struct ObservableSet {
  Operator cos_x, cos_y, cos_z;
  Operator cos2_x, cos2_y, cos2_z;
  Operator h0;
  Operator j2;

  static ObservableSet build(const RotorSpec& spec,
                             std::shared_ptr<const BasisSet> basis);
};

AlignmentRecord alignment_record(const QuantumState& state,
                                 const ObservableSet& obs);
AlignmentRecord alignment_record(const QuantumState& state,
                                 const RotorSpec& spec,
                                 std::shared_ptr<const BasisSet> basis);

// rho(theta, phi) for a linear-molecule state, chi integrated out;
// normalized so that the sin(theta)-weighted quadrature sum is 1.
struct AngularDistribution {
  std::vector<double> theta;
  std::vector<double> phi;
  Eigen::MatrixXd density;  // theta-major: density(it, ip)
  double quadrature_norm = 0.0;
};

AngularDistribution angular_distribution(const QuantumState& state,
                                         int theta_count, int phi_count);

struct Feature {
  double time;
  double value;
  enum class Kind { Peak, Trough } kind;
};

// Local extrema of one recorded column whose prominence against the
// flanking opposite extrema exceeds prominence_rel times the signal span.
std::vector<Feature> detect_features(const Trajectory& traj,
                                     const std::string& column,
                                     double prominence_rel = 0.05);
std::vector<Feature> detect_features(const std::vector<double>& times,
                                     const std::vector<double>& signal,
                                     double prominence_rel = 0.05);

}  // namespace rotorsim
