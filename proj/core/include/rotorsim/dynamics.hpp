#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rotorsim/operators.hpp"
#include "rotorsim/pulses.hpp"

namespace rotorsim {

// Numerical failures that abort a run (distinct from config/usage errors).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncationError : NumericalError {
  using NumericalError::NumericalError;
};
struct StepSizeError : NumericalError {
  using NumericalError::NumericalError;
};
struct PositivityError : NumericalError {
  using NumericalError::NumericalError;
};

// Pure vector or density matrix over a basis. Default-constructed states
// are empty placeholders (null basis) and must be assigned before use.
class QuantumState {
 public:
  QuantumState() = default;
  static QuantumState pure(std::shared_ptr<const BasisSet> basis, int index);
  static QuantumState pure(std::shared_ptr<const BasisSet> basis,
                           Eigen::VectorXcd psi);
  static QuantumState mixed(std::shared_ptr<const BasisSet> basis,
                            Eigen::MatrixXcd rho);

  bool is_pure() const { return std::holds_alternative<Eigen::VectorXcd>(payload_); }
  const std::shared_ptr<const BasisSet>& basis() const { return basis_; }
  const Eigen::VectorXcd& vector() const;
  const Eigen::MatrixXcd& density() const;
  Eigen::VectorXcd& vector();
  Eigen::MatrixXcd& density();

  // Dense density matrix view (outer product for pure states).
  Eigen::MatrixXcd to_density() const;
  // Diagonal of the density matrix / |psi_i|^2.
  Eigen::VectorXd populations() const;

  double norm_or_trace() const;
  // Throws NumericalError when the norm/trace/positivity contracts are
  // violated beyond tolerance.
  void check(double tol = 1e-8) const;

 private:
  std::shared_ptr<const BasisSet> basis_;
  std::variant<Eigen::VectorXcd, Eigen::MatrixXcd> payload_;
};

// Canonical thermal state over the truncated basis, nuclear-spin weights
// applied by j parity. Throws TruncationError when the top j-shell carries
// more than truncation_tol population.
QuantumState thermal_state(const RotorSpec& spec,
                           std::shared_ptr<const BasisSet> basis,
                           double temperature_kelvin,
                           double truncation_tol = 1e-6);

// Uniform output grid: rows at t_start + i * dt * output_every.
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 0.0;
  double dt = 1e-3;
  int output_every = 1;

  int steps() const;
  void validate() const;
};

using HamiltonianFn = std::function<void(double t, Eigen::MatrixXcd& h)>;

struct Recorder {
  std::vector<std::string> columns;
  std::function<void(double t, const QuantumState& s, Eigen::VectorXd& row)> eval;
  static Recorder none();
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::string> columns;
  std::vector<Eigen::VectorXd> rows;
  std::vector<std::pair<double, QuantumState>> checkpoints;

  int column_index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
};

struct PropagationOptions {
  // refuse steps with dt * max|eigenvalue(H)| above this phase bound
  double max_phase_per_step = 0.5;
  // abort when the two highest j-shells accumulate this much population
  double watchdog_threshold = 1e-6;
  bool enforce_watchdog = true;
  // Lindblad per-step error estimate triggering step halving
  double lindblad_step_tol = 1e-9;
  double positivity_tol = 1e-8;
  std::vector<double> checkpoint_times;
};

// Piecewise-constant-Hamiltonian propagation with the exact matrix
// exponential per step; H is sampled at step midpoints. Norm is preserved
// to rounding and verified at every recorded time.
Trajectory propagate_schrodinger(const QuantumState& initial,
                                 const HamiltonianFn& h_of_t,
                                 const TimeGrid& grid, const Recorder& rec,
                                 const PropagationOptions& opts = {});

// Density-matrix transport rho -> U rho U^dagger on the same stepping.
Trajectory propagate_lvn(const QuantumState& initial, const HamiltonianFn& h_of_t,
                         const TimeGrid& grid, const Recorder& rec,
                         const PropagationOptions& opts = {});

struct DissipatorSet {
  std::vector<Eigen::MatrixXcd> collapse_ops;
  // uniform decay toward a target state at rate reset_gamma,
  // d rho = reset_gamma (target Tr[rho] - rho); equivalent to the collapse
  // set {sqrt(gamma p_a)|a><b|} but applied in closed form
  double reset_gamma = 0.0;
  Eigen::MatrixXcd reset_target;
};

// Fixed-step RK4 with an embedded error estimate (step doubling); steps
// exceeding the estimate are recursively halved. Trace preservation and
// positivity are monitored at recorded times.
Trajectory propagate_lindblad(const QuantumState& initial,
                              const HamiltonianFn& h_of_t,
                              const DissipatorSet& dissipators,
                              const TimeGrid& grid, const Recorder& rec,
                              const PropagationOptions& opts = {});

Trajectory propagate_lindblad(const QuantumState& initial,
                              const HamiltonianFn& h_of_t,
                              const std::vector<Eigen::MatrixXcd>& collapse_ops,
                              const TimeGrid& grid, const Recorder& rec,
                              const PropagationOptions& opts = {});

// Single diagonal dephasing generator in the energy eigenbasis of a
// diagonal free Hamiltonian: L = sqrt(gamma) * diag(j(j+1)) / (j_max(j_max+1)).
// A model label, not derived from any microscopic bath.
Eigen::MatrixXcd make_dephasing_op(const BasisSet& basis, double gamma);

// Exact free evolution for a time-independent Hamiltonian; used to jump
// across field-free stretches without grid stepping.
class FreeEvolution {
 public:
  explicit FreeEvolution(const Operator& h0);
  const std::shared_ptr<const BasisSet>& basis() const { return basis_; }
  void advance(Eigen::VectorXcd& psi, double dt) const;
  void advance(Eigen::MatrixXcd& rho, double dt) const;
  double max_abs_eigenvalue() const { return max_abs_; }

 private:
  std::shared_ptr<const BasisSet> basis_;
  bool diagonal_ = false;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;  // empty when diagonal
  double max_abs_ = 0.0;
};

// Population in the j >= j_max - (shells - 1) subspace; the truncation
// watchdog quantity.
double top_shell_population(const QuantumState& state, int shells = 2);

// Full pulse-schedule propagation: kick trains act as instantaneous
// unitaries, continuous pulses are grid-stepped at step_dt across their
// support, and field-free stretches are jumped with the exact free
// propagator. With dissipators present the whole horizon is RK4-stepped
// instead (no free-jump shortcut).
struct PulsedRunSettings {
  double t_start = 0.0;
  std::vector<double> output_times;  // sorted, >= t_start
  double step_dt = 1e-3;
  InteractionOptions interaction;
  PropagationOptions prop;
  DissipatorSet dissipators;
  bool lindblad = false;  // set, or implied by non-empty dissipators
};

Trajectory propagate_pulsed(const QuantumState& initial, const RotorSpec& spec,
                            const std::vector<PulseSpec>& pulses,
                            const PulsedRunSettings& settings,
                            const Recorder& rec);

// H(t) assembled from a static Hamiltonian and the continuous pulses in a
// list; kick-train events are exposed separately.
class TimeDependentHamiltonian {
 public:
  TimeDependentHamiltonian(const RotorSpec& spec,
                           std::shared_ptr<const BasisSet> basis,
                           const std::vector<PulseSpec>& pulses,
                           const InteractionOptions& opts = {});

  const std::shared_ptr<const BasisSet>& basis() const { return basis_; }
  const Operator& h0() const { return h0_; }
  void assemble(double t, Eigen::MatrixXcd& h) const;
  HamiltonianFn as_fn() const;

  bool has_field(double t) const;
  // merged closed intervals where any continuous pulse is active
  const std::vector<std::pair<double, double>>& field_windows() const {
    return windows_;
  }
  // sorted instantaneous alignment kicks (time, P)
  const std::vector<std::pair<double, double>>& kicks() const { return kicks_; }
  bool m_conserving() const { return m_conserving_; }

 private:
  struct Term {
    Eigen::MatrixXcd mat;
    std::function<double(const FieldSample&)> coeff;
    int pulse_index;
  };
  std::shared_ptr<const BasisSet> basis_;
  Operator h0_;
  std::vector<PulseSpec> continuous_;
  std::vector<Term> terms_;
  std::vector<std::pair<double, double>> windows_;
  std::vector<std::pair<double, double>> kicks_;
  bool m_conserving_ = true;
};

}  // namespace rotorsim
