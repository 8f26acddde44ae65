#include "rotorsim/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace rotorsim {

namespace {

// fixed 53-bit uniform in [0, 1), identical across platforms for one seed
class UniformRng {
 public:
  explicit UniformRng(std::uint64_t seed) : engine_(seed) {}
  double next() { return (engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next_index(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

ProjectedTarget projected_target(std::shared_ptr<const BasisSet> basis,
                                 const Operator& op, int j_opt, int m) {
  if (!same_basis(*basis, *op.basis)) {
    throw std::invalid_argument("projected_target: basis mismatch");
  }
  if (j_opt < 0) throw std::invalid_argument("projected_target: j_opt < 0");
  if (j_opt > basis->j_max() - 2) {
    throw std::invalid_argument(
        "projected_target: j_opt must stay at least two shells below j_max (" +
        std::to_string(j_opt) + " vs j_max " + std::to_string(basis->j_max()) +
        ")");
  }

  std::vector<int> idx;
  for (int i : basis->m_block(m)) {
    if (basis->state_at(i).j <= j_opt) idx.push_back(i);
  }
  if (idx.empty()) {
    throw std::invalid_argument("projected_target: empty projection subspace");
  }

  const int d = static_cast<int>(idx.size());
  Eigen::MatrixXcd sub(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) sub(r, c) = op.mat(idx[r], idx[c]);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub);
  const int top = d - 1;  // eigenvalues ascending
  Eigen::VectorXcd v = es.eigenvectors().col(top);

  // fix the arbitrary global phase: largest component real positive
  int arg_max = 0;
  for (int i = 1; i < d; ++i) {
    if (std::abs(v[i]) > std::abs(v[arg_max])) arg_max = i;
  }
  v *= std::polar(1.0, -std::arg(v[arg_max]));

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis->dimension());
  for (int i = 0; i < d; ++i) psi[idx[i]] = v[i];
  return {QuantumState::pure(std::move(basis), std::move(psi)),
          es.eigenvalues()[top]};
}

namespace {

void check_bounds(const ControlProblem& problem, const Eigen::VectorXd& params) {
  if (params.size() != static_cast<int>(problem.params.size())) {
    throw std::invalid_argument("evaluate: parameter count mismatch");
  }
  for (int i = 0; i < params.size(); ++i) {
    const auto& b = problem.params[i];
    if (!(params[i] >= b.lo && params[i] <= b.hi)) {
      throw std::invalid_argument("evaluate: parameter '" + b.name +
                                  "' outside [" + std::to_string(b.lo) + ", " +
                                  std::to_string(b.hi) + "]");
    }
  }
}

}  // namespace

EvalResult evaluate(const ControlProblem& problem, const Eigen::VectorXd& params) {
  check_bounds(problem, params);
  const std::vector<PulseSpec> pulses = problem.pulse_factory(params);

  PulsedRunSettings settings;
  settings.step_dt = problem.grid_dt;
  settings.prop = problem.prop;
  if (problem.kind == ObjectiveKind::WindowAverage) {
    if (!(problem.window_hi > problem.window_lo)) {
      throw std::invalid_argument("evaluate: empty objective window");
    }
    const int n = 101;
    settings.output_times.resize(n);
    for (int i = 0; i < n; ++i) {
      settings.output_times[i] =
          problem.window_lo +
          (problem.window_hi - problem.window_lo) * i / (n - 1);
    }
  } else {
    settings.output_times = {problem.t_probe};
  }

  double figure = 0.0;
  double top_shell = 0.0;
  if (problem.kind == ObjectiveKind::TargetFidelity) {
    const Eigen::MatrixXcd target_rho = problem.target.to_density();
    Recorder rec{{"fid"}, [&](double, const QuantumState& s, Eigen::VectorXd& row) {
                    row[0] = (target_rho * s.to_density()).trace().real();
                    top_shell = std::max(top_shell, top_shell_population(s));
                  }};
    Trajectory traj =
        propagate_pulsed(problem.initial, problem.spec, pulses, settings, rec);
    figure = traj.rows.back()[0];
  } else {
    Recorder rec{{"obj"}, [&](double, const QuantumState& s, Eigen::VectorXd& row) {
                    row[0] = expectation(problem.objective_op, s);
                    top_shell = std::max(top_shell, top_shell_population(s));
                  }};
    Trajectory traj =
        propagate_pulsed(problem.initial, problem.spec, pulses, settings, rec);
    if (problem.kind == ObjectiveKind::WindowAverage) {
      double acc = 0.0;
      for (const auto& row : traj.rows) acc += row[0];
      figure = acc / static_cast<double>(traj.rows.size());
    } else {
      figure = traj.rows.back()[0];
    }
    if (problem.maximize_abs) figure = std::abs(figure);
  }

  double energy = 0.0;
  for (const PulseSpec& p : pulses) energy += pulse_energy(p, problem.spec);

  return {figure - problem.energy_penalty * energy, figure, energy, top_shell};
}

namespace {

struct Tracker {
  const ControlProblem* problem;
  std::vector<HistoryEntry> history;
  Eigen::VectorXd best_params;
  double best = -std::numeric_limits<double>::infinity();
  int budget;

  bool exhausted() const {
    return static_cast<int>(history.size()) >= budget;
  }

  double eval(const Eigen::VectorXd& x) {
    const EvalResult r = evaluate(*problem, x);
    if (r.value > best) {
      best = r.value;
      best_params = x;
    }
    history.push_back(
        {static_cast<int>(history.size()), x, r.value, best});
    return r.value;
  }
};

Eigen::VectorXd clamp_to_bounds(const ControlProblem& problem,
                                Eigen::VectorXd x) {
  for (int i = 0; i < x.size(); ++i) {
    x[i] = std::clamp(x[i], problem.params[i].lo, problem.params[i].hi);
  }
  return x;
}

OptimizeResult run_nelder_mead(const ControlProblem& problem, int budget) {
  const int d = static_cast<int>(problem.params.size());
  Tracker tracker{&problem, {}, {}, -std::numeric_limits<double>::infinity(),
                  budget};

  // simplex seeded at the box center with per-axis offsets
  std::vector<Eigen::VectorXd> xs;
  Eigen::VectorXd x0(d);
  for (int i = 0; i < d; ++i) x0[i] = 0.5 * (problem.params[i].lo + problem.params[i].hi);
  xs.push_back(x0);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd xi = x0;
    xi[i] += 0.25 * (problem.params[i].hi - problem.params[i].lo);
    xs.push_back(clamp_to_bounds(problem, xi));
  }

  std::vector<double> fs;
  for (const auto& x : xs) {
    if (tracker.exhausted()) break;
    fs.push_back(tracker.eval(x));
  }

  // maximization: sort descending by value
  auto order = [&] {
    std::vector<int> idx(fs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] > fs[b]; });
    std::vector<Eigen::VectorXd> xs2(xs.size());
    std::vector<double> fs2(fs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      xs2[i] = xs[idx[i]];
      fs2[i] = fs[idx[i]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  while (!tracker.exhausted() && fs.size() == xs.size() &&
         static_cast<int>(xs.size()) == d + 1) {
    order();
    double spread = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      spread = std::max(spread, (xs[i] - xs[0]).norm());
    }
    if (spread < 1e-12) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += xs[i];
    centroid /= d;
    const Eigen::VectorXd& worst = xs[d];

    const Eigen::VectorXd xr = clamp_to_bounds(problem, centroid + (centroid - worst));
    const double fr = tracker.eval(xr);
    if (tracker.exhausted()) break;

    if (fr > fs[0]) {
      const Eigen::VectorXd xe =
          clamp_to_bounds(problem, centroid + 2.0 * (centroid - worst));
      const double fe = tracker.eval(xe);
      if (fe > fr) {
        xs[d] = xe;
        fs[d] = fe;
      } else {
        xs[d] = xr;
        fs[d] = fr;
      }
    } else if (fr > fs[d - 1]) {
      xs[d] = xr;
      fs[d] = fr;
    } else {
      const Eigen::VectorXd xc =
          clamp_to_bounds(problem, centroid + 0.5 * (worst - centroid));
      if (tracker.exhausted()) break;
      const double fc = tracker.eval(xc);
      if (fc > fs[d]) {
        xs[d] = xc;
        fs[d] = fc;
      } else {
        // shrink toward the best vertex
        for (int i = 1; i <= d; ++i) {
          if (tracker.exhausted()) break;
          xs[i] = clamp_to_bounds(problem, xs[0] + 0.5 * (xs[i] - xs[0]));
          fs[i] = tracker.eval(xs[i]);
        }
      }
    }
  }

  OptimizeResult out;
  out.best_params = tracker.best_params;
  out.best_value = tracker.best;
  out.history = std::move(tracker.history);
  out.budget_exhausted = static_cast<int>(out.history.size()) >= budget;
  return out;
}

OptimizeResult run_differential_evolution(const ControlProblem& problem,
                                          int budget, std::uint64_t seed) {
  const int d = static_cast<int>(problem.params.size());
  const int np = std::max(8, 5 * d);
  const double f_weight = 0.7, crossover = 0.9;
  UniformRng rng(seed);
  Tracker tracker{&problem, {}, {}, -std::numeric_limits<double>::infinity(),
                  budget};

  std::vector<Eigen::VectorXd> pop(np);
  std::vector<double> fit(np, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < np; ++i) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) {
      x[k] = problem.params[k].lo +
             rng.next() * (problem.params[k].hi - problem.params[k].lo);
    }
    pop[i] = x;
    if (!tracker.exhausted()) fit[i] = tracker.eval(x);
  }

  while (!tracker.exhausted()) {
    for (int i = 0; i < np && !tracker.exhausted(); ++i) {
      int r1 = static_cast<int>(rng.next_index(np));
      while (r1 == i) r1 = static_cast<int>(rng.next_index(np));
      int r2 = static_cast<int>(rng.next_index(np));
      while (r2 == i || r2 == r1) r2 = static_cast<int>(rng.next_index(np));
      int r3 = static_cast<int>(rng.next_index(np));
      while (r3 == i || r3 == r1 || r3 == r2) {
        r3 = static_cast<int>(rng.next_index(np));
      }
      Eigen::VectorXd trial = pop[i];
      const int j_rand = static_cast<int>(rng.next_index(d));
      for (int k = 0; k < d; ++k) {
        if (k == j_rand || rng.next() < crossover) {
          trial[k] = pop[r1][k] + f_weight * (pop[r2][k] - pop[r3][k]);
        }
      }
      trial = clamp_to_bounds(problem, trial);
      const double ft = tracker.eval(trial);
      if (ft > fit[i]) {
        pop[i] = trial;
        fit[i] = ft;
      }
    }
  }

  OptimizeResult out;
  out.best_params = tracker.best_params;
  out.best_value = tracker.best;
  out.history = std::move(tracker.history);
  out.budget_exhausted = true;
  return out;
}

}  // namespace

OptimizeResult optimize(const ControlProblem& problem, OptimizeMethod method,
                        int budget, std::uint64_t seed) {
  const int d = static_cast<int>(problem.params.size());
  if (d == 0) throw std::invalid_argument("optimize: no free parameters");
  const int min_budget = method == OptimizeMethod::NelderMead
                             ? d + 2
                             : std::max(8, 5 * d);
  if (budget < min_budget) {
    throw std::invalid_argument("optimize: budget below the method minimum (" +
                                std::to_string(min_budget) + ")");
  }
  switch (method) {
    case OptimizeMethod::NelderMead:
      return run_nelder_mead(problem, budget);
    case OptimizeMethod::DifferentialEvolution:
      return run_differential_evolution(problem, budget, seed);
  }
  throw std::logic_error("optimize: unreachable");
}

Eigen::VectorXd objective_gradient(const ControlProblem& problem,
                                   const Eigen::VectorXd& params) {
  check_bounds(problem, params);
  const int d = static_cast<int>(problem.params.size());
  Eigen::VectorXd grad(d);
  for (int i = 0; i < d; ++i) {
    const double h = 1e-4 * (problem.params[i].hi - problem.params[i].lo);
    // shift the central stencil inward near the box edges
    double lo = params[i] - h, hi = params[i] + h;
    if (lo < problem.params[i].lo) {
      lo = problem.params[i].lo;
      hi = lo + 2.0 * h;
    } else if (hi > problem.params[i].hi) {
      hi = problem.params[i].hi;
      lo = hi - 2.0 * h;
    }
    Eigen::VectorXd xp = params, xm = params;
    xp[i] = hi;
    xm[i] = lo;
    grad[i] = (evaluate(problem, xp).value - evaluate(problem, xm).value) /
              (hi - lo);
  }
  return grad;
}

}  // namespace rotorsim
