#include <doctest.h>

#include <cmath>

#include "rotorsim/constants.hpp"
#include "rotorsim/control.hpp"

using namespace rotorsim;

namespace {

RotorSpec linear_spec() {
  RotorSpec s;
  s.B = 1.0;
  s.alpha_par = 1.0;
  s.alpha_perp = 0.0;
  return s;
}

// one-parameter kick problem: maximize <cos^2 theta> at a fixed probe time
ControlProblem kick_problem(std::shared_ptr<const BasisSet> basis) {
  // Z-only driving keeps |0,0,0> in its m-block
  ControlProblem p;
  p.spec = linear_spec();
  p.basis = basis;
  p.initial = QuantumState::pure(basis, basis->index_of(0, 0, 0));
  p.params = {{"P", 0.0, 3.0}};
  p.pulse_factory = [](const Eigen::VectorXd& x) {
    KickTrain k;
    k.t_first = 0.0;
    k.count = 1;
    k.strength = x[0];
    return std::vector<PulseSpec>{PulseSpec{k}};
  };
  p.kind = ObjectiveKind::ExpectationAtTime;
  p.objective_op = cos_product(basis, SpaceAxis::Z, SpaceAxis::Z);
  p.t_probe = 0.35;  // inside the first post-kick transient
  p.grid_dt = 1e-3;
  return p;
}

}  // namespace

TEST_CASE("projected_target reference values") {
  auto basis = BasisSet::build(TopClass::Linear, 8);
  Operator cz = direction_cosine(basis, SpaceAxis::Z);

  ProjectedTarget t1 = projected_target(basis, cz, 1, 0);
  CHECK(t1.eigenvalue == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-13));
  const Eigen::VectorXcd& psi = t1.state.vector();
  CHECK(std::abs(psi[basis->index_of(0, 0, 0)]) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(std::abs(psi[basis->index_of(1, 0, 0)]) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  ProjectedTarget t0 = projected_target(basis, cz, 0, 0);
  CHECK(t0.eigenvalue == doctest::Approx(0.0));

  // eigenvalue grows monotonically with j_opt (nested subspaces)
  double prev = -1.0;
  for (int j_opt = 0; j_opt <= 6; ++j_opt) {
    const double ev = projected_target(basis, cz, j_opt, 0).eigenvalue;
    CHECK(ev >= prev - 1e-14);
    prev = ev;
  }

  // guard band against truncation
  CHECK_THROWS_AS(projected_target(basis, cz, 7, 0), std::invalid_argument);
  CHECK_THROWS_AS(projected_target(basis, cz, 8, 0), std::invalid_argument);
}

TEST_CASE("evaluate: zero-amplitude orientation objective vanishes") {
  auto basis = BasisSet::build(TopClass::Linear, 10);
  RotorSpec spec = linear_spec();
  spec.mu0 = 1.0;

  ControlProblem p;
  p.spec = spec;
  p.basis = basis;
  p.initial = thermal_state(spec, basis, 2.0);
  p.params = {{"amp", 0.0, 1.0}};
  p.pulse_factory = [](const Eigen::VectorXd& x) {
    HalfCyclePulse h;
    h.amplitude = x[0];
    h.duration = 0.3;
    return std::vector<PulseSpec>{PulseSpec{h}};
  };
  p.kind = ObjectiveKind::ExpectationAtTime;
  p.objective_op = direction_cosine(basis, SpaceAxis::Z);
  p.t_probe = 1.0;
  p.grid_dt = 1e-3;

  Eigen::VectorXd zero(1);
  zero << 0.0;
  const EvalResult r = evaluate(p, zero);
  CHECK(std::abs(r.figure) < 1e-12);
  CHECK(r.energy == 0.0);
}

TEST_CASE("evaluate: energy penalty is exactly linear in lambda") {
  auto basis = BasisSet::build(TopClass::Linear, 12)->m_restricted(0);
  ControlProblem p = kick_problem(basis);
  Eigen::VectorXd x(1);
  x << 1.3;
  const EvalResult free_run = evaluate(p, x);
  p.energy_penalty = 0.7;
  const EvalResult penalized = evaluate(p, x);
  CHECK(penalized.figure == doctest::Approx(free_run.figure).epsilon(1e-14));
  CHECK(free_run.value - penalized.value ==
        doctest::Approx(0.7 * free_run.energy).epsilon(1e-12));

  // out-of-bounds parameters rejected
  x << 5.0;
  CHECK_THROWS_AS(evaluate(p, x), std::invalid_argument);
}

TEST_CASE("evaluate matches a direct simulation of the same pulse") {
  auto basis = BasisSet::build(TopClass::Linear, 14)->m_restricted(0);
  ControlProblem p = kick_problem(basis);
  Eigen::VectorXd x(1);
  x << 0.8;
  const EvalResult r = evaluate(p, x);

  // direct: kick then free evolution to the probe time
  Unitary kick = sudden_propagator(basis, 0.8);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis->dimension());
  psi[basis->index_of(0, 0, 0)] = 1.0;
  psi = kick.mat * psi;
  FreeEvolution free(free_hamiltonian(p.spec, basis));
  free.advance(psi, p.t_probe);
  const double direct =
      expectation(p.objective_op, QuantumState::pure(basis, psi));
  CHECK(r.figure == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("optimizer matches a dense grid scan on the 1-parameter problem") {
  auto basis = BasisSet::build(TopClass::Linear, 16)->m_restricted(0);
  ControlProblem p = kick_problem(basis);

  // brute-force oracle: dense scan, lowest parameter wins ties
  const int n_scan = 301;
  double best_val = -1e300, best_p = 0.0;
  for (int i = 0; i < n_scan; ++i) {
    Eigen::VectorXd x(1);
    x << 3.0 * i / (n_scan - 1);
    const double v = evaluate(p, x).value;
    if (v > best_val + 1e-15) {
      best_val = v;
      best_p = x[0];
    }
  }
  const double cell = 3.0 / (n_scan - 1);

  OptimizeResult nm = optimize(p, OptimizeMethod::NelderMead, 120, 0);
  CHECK(std::abs(nm.best_params[0] - best_p) <= cell);
  OptimizeResult de = optimize(p, OptimizeMethod::DifferentialEvolution, 160, 42);
  CHECK(std::abs(de.best_params[0] - best_p) <= cell);
}

TEST_CASE("optimizer invariants: monotone history, bounds, determinism") {
  auto basis = BasisSet::build(TopClass::Linear, 12)->m_restricted(0);
  ControlProblem p = kick_problem(basis);

  for (OptimizeMethod m :
       {OptimizeMethod::NelderMead, OptimizeMethod::DifferentialEvolution}) {
    OptimizeResult r = optimize(p, m, 60, 7);
    REQUIRE(!r.history.empty());
    double best = -1e300;
    for (const auto& h : r.history) {
      CHECK(h.best_so_far >= best - 1e-15);
      best = std::max(best, h.best_so_far);
      CHECK(h.params[0] >= 0.0);
      CHECK(h.params[0] <= 3.0);
    }
    CHECK(r.best_value == doctest::Approx(best));
  }

  // seed invariance of the simplex method
  OptimizeResult a = optimize(p, OptimizeMethod::NelderMead, 40, 1);
  OptimizeResult b = optimize(p, OptimizeMethod::NelderMead, 40, 999);
  CHECK(a.best_params[0] == b.best_params[0]);
  CHECK(a.best_value == b.best_value);

  // de reproducibility for a fixed seed
  OptimizeResult d1 = optimize(p, OptimizeMethod::DifferentialEvolution, 50, 5);
  OptimizeResult d2 = optimize(p, OptimizeMethod::DifferentialEvolution, 50, 5);
  REQUIRE(d1.history.size() == d2.history.size());
  for (std::size_t i = 0; i < d1.history.size(); ++i) {
    CHECK(d1.history[i].value == d2.history[i].value);
  }

  CHECK_THROWS_AS(optimize(p, OptimizeMethod::NelderMead, 1, 0),
                  std::invalid_argument);
}

TEST_CASE("two-parameter two-color orientation: optimum sits at cos(phi)=+-1") {
  auto basis = BasisSet::build(TopClass::Linear, 10)->m_restricted(0);
  RotorSpec spec = linear_spec();
  spec.beta_par = 1.0;
  spec.beta_perp = 0.2;

  ControlProblem p;
  p.spec = spec;
  p.basis = basis;
  p.initial = QuantumState::pure(basis, basis->index_of(0, 0, 0));
  p.params = {{"phi", 0.0, kTwoPi}, {"e2", 0.0, 1.0}};
  p.pulse_factory = [](const Eigen::VectorXd& x) {
    TwoColorPulse tc;
    tc.t0 = 0.15;
    tc.fwhm = 0.05;
    tc.e1 = 1.0;
    tc.e2 = x[1];
    tc.phi = x[0];
    return std::vector<PulseSpec>{PulseSpec{tc}};
  };
  p.kind = ObjectiveKind::ExpectationAtTime;
  p.objective_op = direction_cosine(basis, SpaceAxis::Z);
  p.maximize_abs = true;
  p.t_probe = 0.7;
  p.grid_dt = 5e-4;

  OptimizeResult r = optimize(p, OptimizeMethod::DifferentialEvolution, 250, 11);
  CHECK(std::abs(std::cos(r.best_params[0])) > 0.995);
  CHECK(r.best_params[1] > 0.9);  // more second-harmonic field, more orientation

  // grid verification of the phi structure at fixed e2
  double best_scan = -1.0, best_phi = 0.0;
  for (int i = 0; i <= 60; ++i) {
    Eigen::VectorXd x(2);
    x << kTwoPi * i / 60.0, 1.0;
    const double v = evaluate(p, x).figure;
    if (v > best_scan) {
      best_scan = v;
      best_phi = x[0];
    }
  }
  CHECK(std::abs(std::cos(best_phi)) > 0.99);
}

TEST_CASE("weak-field runs never beat the projected-target bound") {
  auto basis = BasisSet::build(TopClass::Linear, 8)->m_restricted(0);
  RotorSpec spec = linear_spec();
  spec.mu0 = 1.0;
  const double bound = 1.0 / std::sqrt(3.0);

  ControlProblem p;
  p.spec = spec;
  p.basis = basis;
  p.initial = QuantumState::pure(basis, basis->index_of(0, 0, 0));
  p.params = {{"amp", 0.0, 0.05}};
  p.pulse_factory = [](const Eigen::VectorXd& x) {
    HalfCyclePulse h;
    h.amplitude = x[0];
    h.duration = 0.4;
    return std::vector<PulseSpec>{PulseSpec{h}};
  };
  p.kind = ObjectiveKind::WindowAverage;
  p.objective_op = direction_cosine(basis, SpaceAxis::Z);
  p.maximize_abs = true;
  p.window_lo = 0.4;
  p.window_hi = 3.5;
  p.grid_dt = 1e-3;

  OptimizeResult r = optimize(p, OptimizeMethod::NelderMead, 40, 0);
  for (const auto& h : r.history) {
    CHECK(h.value <= bound + 1e-9);
  }
}

TEST_CASE("objective gradient matches slope on a smooth problem") {
  auto basis = BasisSet::build(TopClass::Linear, 12)->m_restricted(0);
  ControlProblem p = kick_problem(basis);
  Eigen::VectorXd x(1);
  x << 1.0;
  const Eigen::VectorXd g = objective_gradient(p, x);
  // compare with a wider secant
  Eigen::VectorXd xp = x, xm = x;
  xp[0] += 0.01;
  xm[0] -= 0.01;
  const double secant =
      (evaluate(p, xp).value - evaluate(p, xm).value) / 0.02;
  CHECK(g[0] == doctest::Approx(secant).epsilon(1e-3));
}
