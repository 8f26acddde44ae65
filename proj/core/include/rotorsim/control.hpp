#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rotorsim/dynamics.hpp"
#include "rotorsim/observables.hpp"

namespace rotorsim {

// Top eigenpair of the objective operator projected onto j <= j_opt within
// one m-block. j_opt must stay j_max - 2 or lower so the projection is not
// corrupted by basis truncation.
struct ProjectedTarget {
  QuantumState state;   // embedded in the full basis
  double eigenvalue;
};

ProjectedTarget projected_target(std::shared_ptr<const BasisSet> basis,
                                 const Operator& op, int j_opt, int m = 0);

enum class ObjectiveKind {
  ExpectationAtTime,   // <op>(t_probe)
  TargetFidelity,      // |<target|psi(t_probe)>|^2 (Tr for mixed states)
  WindowAverage,       // mean of <op> over [window_lo, window_hi]
};

struct BoundedParam {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

// Parametrized-pulse optimization problem: params map to a pulse list; the
// figure of merit comes from propagating the initial state through it.
struct ControlProblem {
  RotorSpec spec;
  std::shared_ptr<const BasisSet> basis;
  QuantumState initial;
  std::vector<BoundedParam> params;
  std::function<std::vector<PulseSpec>(const Eigen::VectorXd&)> pulse_factory;

  ObjectiveKind kind = ObjectiveKind::ExpectationAtTime;
  Operator objective_op;
  QuantumState target;      // TargetFidelity only
  double t_probe = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  bool maximize_abs = false;  // score |<op>| instead of the signed value

  double energy_penalty = 0.0;  // lambda
  double grid_dt = 1e-3;
  PropagationOptions prop;
};

struct EvalResult {
  double value = 0.0;   // figure - lambda * energy
  double figure = 0.0;
  double energy = 0.0;
  double top_shell = 0.0;  // worst truncation-watchdog reading at the outputs
};

// Deterministic objective evaluation; propagation failures propagate as
// exceptions rather than silent penalties.
EvalResult evaluate(const ControlProblem& problem, const Eigen::VectorXd& params);

enum class OptimizeMethod { NelderMead, DifferentialEvolution };

struct HistoryEntry {
  int eval_index;
  Eigen::VectorXd params;
  double value;
  double best_so_far;
};

struct OptimizeResult {
  Eigen::VectorXd best_params;
  double best_value = 0.0;
  std::vector<HistoryEntry> history;
  bool budget_exhausted = false;
};

// Budget counts objective evaluations. Both methods respect the declared
// bounds, produce a monotone best-so-far history, and are reproducible for
// a fixed seed (Nelder-Mead ignores the seed entirely).
OptimizeResult optimize(const ControlProblem& problem, OptimizeMethod method,
                        int budget, std::uint64_t seed);

// Central finite-difference gradient of the objective,
// h = 1e-4 * (hi - lo) per axis.
Eigen::VectorXd objective_gradient(const ControlProblem& problem,
                                   const Eigen::VectorXd& params);

}  // namespace rotorsim
