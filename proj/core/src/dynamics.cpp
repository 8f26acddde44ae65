#include "rotorsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rotorsim/constants.hpp"

namespace rotorsim {

namespace {

constexpr Complex kI{0.0, 1.0};

bool is_diagonal(const Eigen::MatrixXcd& m) {
  for (int c = 0; c < m.cols(); ++c) {
    for (int r = 0; r < m.rows(); ++r) {
      if (r != c && m(r, c) != Complex(0.0, 0.0)) return false;
    }
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- QuantumState

QuantumState QuantumState::pure(std::shared_ptr<const BasisSet> basis, int index) {
  if (index < 0 || index >= basis->dimension()) {
    throw std::invalid_argument("QuantumState::pure: index out of range");
  }
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis->dimension());
  psi[index] = 1.0;
  return pure(std::move(basis), std::move(psi));
}

QuantumState QuantumState::pure(std::shared_ptr<const BasisSet> basis,
                                Eigen::VectorXcd psi) {
  if (psi.size() != basis->dimension()) {
    throw std::invalid_argument("QuantumState::pure: size mismatch");
  }
  QuantumState s;
  s.basis_ = std::move(basis);
  s.payload_ = std::move(psi);
  return s;
}

QuantumState QuantumState::mixed(std::shared_ptr<const BasisSet> basis,
                                 Eigen::MatrixXcd rho) {
  if (rho.rows() != basis->dimension() || rho.cols() != basis->dimension()) {
    throw std::invalid_argument("QuantumState::mixed: size mismatch");
  }
  QuantumState s;
  s.basis_ = std::move(basis);
  s.payload_ = std::move(rho);
  return s;
}

const Eigen::VectorXcd& QuantumState::vector() const {
  return std::get<Eigen::VectorXcd>(payload_);
}
const Eigen::MatrixXcd& QuantumState::density() const {
  return std::get<Eigen::MatrixXcd>(payload_);
}
Eigen::VectorXcd& QuantumState::vector() {
  return std::get<Eigen::VectorXcd>(payload_);
}
Eigen::MatrixXcd& QuantumState::density() {
  return std::get<Eigen::MatrixXcd>(payload_);
}

Eigen::MatrixXcd QuantumState::to_density() const {
  if (is_pure()) return vector() * vector().adjoint();
  return density();
}

Eigen::VectorXd QuantumState::populations() const {
  if (is_pure()) return vector().cwiseAbs2();
  return density().diagonal().real();
}

double QuantumState::norm_or_trace() const {
  if (is_pure()) return vector().norm();
  return density().trace().real();
}

void QuantumState::check(double tol) const {
  const double nt = norm_or_trace();
  if (std::abs(nt - 1.0) > tol) {
    throw NumericalError("state norm/trace drifted to " + std::to_string(nt));
  }
  if (!is_pure()) {
    const double herm = (density() - density().adjoint()).norm();
    if (herm > tol) {
      throw NumericalError("density matrix lost Hermiticity: " +
                           std::to_string(herm));
    }
  }
}

// --------------------------------------------------------------- thermal state

QuantumState thermal_state(const RotorSpec& spec,
                           std::shared_ptr<const BasisSet> basis,
                           double temperature_kelvin, double truncation_tol) {
  if (temperature_kelvin < 0.0) {
    throw std::invalid_argument("thermal_state: negative temperature");
  }
  spec.validate(basis->top());
  const int n = basis->dimension();
  const Operator h0 = free_hamiltonian(spec, basis);

  // Energies and (for asymmetric tops) eigenvectors, resolved per (j, m)
  // block so every level carries its j label.
  Eigen::VectorXd energy(n);
  Eigen::MatrixXcd vectors;
  const bool diagonal = basis->top() != TopClass::Asymmetric;
  if (diagonal) {
    energy = h0.mat.diagonal().real();
  } else {
    vectors = Eigen::MatrixXcd::Zero(n, n);
    std::map<std::pair<int, int>, std::vector<int>> blocks;
    for (int i = 0; i < n; ++i) {
      const RotorKet& s = basis->state_at(i);
      blocks[{s.j, s.m}].push_back(i);
    }
    for (const auto& [jm, idx] : blocks) {
      const int b = static_cast<int>(idx.size());
      Eigen::MatrixXcd block(b, b);
      for (int r = 0; r < b; ++r)
        for (int c = 0; c < b; ++c) block(r, c) = h0.mat(idx[r], idx[c]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block);
      for (int c = 0; c < b; ++c) {
        energy[idx[c]] = es.eigenvalues()[c];
        for (int r = 0; r < b; ++r) vectors(idx[r], idx[c]) = es.eigenvectors()(r, c);
      }
    }
  }

  const double e0 = energy.minCoeff();
  Eigen::VectorXd weight(n);
  if (temperature_kelvin == 0.0) {
    // ground-state projector; equal mixture over numerically degenerate minima
    for (int i = 0; i < n; ++i) {
      weight[i] = (energy[i] - e0 <= 1e-12 * std::max(1.0, std::abs(e0))) ? 1.0 : 0.0;
    }
  } else {
    const double kT = temperature_kelvin * kKelvinToRadPerPs;
    for (int i = 0; i < n; ++i) {
      weight[i] = spec.spin_weight(basis->state_at(i).j) *
                  std::exp(-(energy[i] - e0) / kT);
    }
  }
  const double z = weight.sum();
  weight /= z;

  double top_shell = 0.0;
  for (int i = 0; i < n; ++i) {
    if (basis->state_at(i).j == basis->j_max()) top_shell += weight[i];
  }
  if (top_shell > truncation_tol) {
    throw TruncationError(
        "thermal_state: top j-shell population " + std::to_string(top_shell) +
        " exceeds " + std::to_string(truncation_tol) +
        "; enlarge j_max for this temperature");
  }

  Eigen::MatrixXcd rho;
  if (diagonal) {
    rho = weight.cast<Complex>().asDiagonal();
  } else {
    rho = vectors * weight.cast<Complex>().asDiagonal() * vectors.adjoint();
  }
  // exact unit trace
  rho /= rho.trace().real();
  return QuantumState::mixed(std::move(basis), std::move(rho));
}

// ------------------------------------------------------------------- TimeGrid

int TimeGrid::steps() const {
  const double span = t_end - t_start;
  return std::max(1, static_cast<int>(std::ceil(span / dt - 1e-9)));
}

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("TimeGrid: dt must be positive");
  }
  if (!(t_end > t_start)) {
    throw std::invalid_argument("TimeGrid: t_end must exceed t_start");
  }
  if (output_every < 1) {
    throw std::invalid_argument("TimeGrid: output_every must be >= 1");
  }
}

Recorder Recorder::none() {
  return Recorder{{}, [](double, const QuantumState&, Eigen::VectorXd&) {}};
}

int Trajectory::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> Trajectory::column(const std::string& name) const {
  const int c = column_index(name);
  if (c < 0) throw std::invalid_argument("Trajectory: no column '" + name + "'");
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][c];
  return out;
}

// ------------------------------------------------------------- unitary stepping

namespace {

// Exponential stepper. Reuses the eigendecomposition while the sampled
// Hamiltonian does not change between steps (free stretches), and solves
// per m-block whenever the matrix respects the basis block structure, which
// keeps cross-block leakage exactly zero.
class StepPropagator {
 public:
  explicit StepPropagator(const BasisSet& basis) {
    const int n = basis.dimension();
    block_of_.assign(n, 0);
    for (int m = -basis.j_max(); m <= basis.j_max(); ++m) {
      const auto& idx = basis.m_block(m);
      if (idx.empty()) continue;
      for (int i : idx) block_of_[i] = static_cast<int>(blocks_.size());
      blocks_.push_back(idx);
    }
    h_prev_.resize(n, n);
  }

  // prepares U = exp(-i h dt); throws StepSizeError on phase bound violation
  void prepare(const Eigen::MatrixXcd& h, double dt, double max_phase) {
    if (!have_prev_ || h != h_prev_) {
      h_prev_ = h;
      decompose(h);
      have_prev_ = true;
      dt_cached_ = std::numeric_limits<double>::quiet_NaN();
    }
    if (max_abs_ * dt >= max_phase) {
      throw StepSizeError(
          "time step too coarse: dt * max|E| = " + std::to_string(max_abs_ * dt) +
          " >= " + std::to_string(max_phase) + "; reduce dt below " +
          std::to_string(max_phase / max_abs_));
    }
    if (dt != dt_cached_) {
      phases_.resize(eigenvalues_.size());
      for (int i = 0; i < eigenvalues_.size(); ++i) {
        phases_[i] = std::polar(1.0, -eigenvalues_[i] * dt);
      }
      if (!diagonal_) build_u();
      dt_cached_ = dt;
    }
  }

  void apply(Eigen::VectorXcd& psi) const {
    if (diagonal_) {
      psi.array() *= phases_.array();
    } else {
      psi = u_ * psi;
    }
  }

  void apply(Eigen::MatrixXcd& rho) const {
    if (diagonal_) {
      rho = phases_.asDiagonal() * rho * phases_.conjugate().asDiagonal();
    } else {
      rho = u_ * rho * u_.adjoint();
    }
  }

 private:
  bool respects_blocks(const Eigen::MatrixXcd& h) const {
    if (blocks_.size() < 2) return false;
    const int n = static_cast<int>(block_of_.size());
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < n; ++r) {
        if (block_of_[r] != block_of_[c] && h(r, c) != Complex(0.0, 0.0)) {
          return false;
        }
      }
    }
    return true;
  }

  void decompose(const Eigen::MatrixXcd& h) {
    const int n = static_cast<int>(h.rows());
    diagonal_ = is_diagonal(h);
    if (diagonal_) {
      eigenvalues_ = h.diagonal().real();
      max_abs_ = eigenvalues_.cwiseAbs().maxCoeff();
      return;
    }
    blocked_ = respects_blocks(h);
    eigenvalues_.resize(n);
    if (blocked_) {
      block_vectors_.clear();
      for (const auto& idx : blocks_) {
        const int b = static_cast<int>(idx.size());
        Eigen::MatrixXcd sub(b, b);
        for (int c = 0; c < b; ++c)
          for (int r = 0; r < b; ++r) sub(r, c) = h(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub);
        for (int c = 0; c < b; ++c) eigenvalues_[idx[c]] = es.eigenvalues()[c];
        block_vectors_.push_back(es.eigenvectors());
      }
    } else {
      solver_.compute(h);
      eigenvalues_ = solver_.eigenvalues();
    }
    max_abs_ = eigenvalues_.cwiseAbs().maxCoeff();
  }

  void build_u() {
    const int n = static_cast<int>(block_of_.size());
    if (!blocked_) {
      u_ = solver_.eigenvectors() * phases_.asDiagonal() *
           solver_.eigenvectors().adjoint();
      return;
    }
    u_ = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& idx = blocks_[bi];
      const int b = static_cast<int>(idx.size());
      Eigen::VectorXcd ph(b);
      for (int c = 0; c < b; ++c) ph[c] = phases_[idx[c]];
      const Eigen::MatrixXcd ub = block_vectors_[bi] * ph.asDiagonal() *
                                  block_vectors_[bi].adjoint();
      for (int c = 0; c < b; ++c)
        for (int r = 0; r < b; ++r) u_(idx[r], idx[c]) = ub(r, c);
    }
  }

  std::vector<int> block_of_;
  std::vector<std::vector<int>> blocks_;
  Eigen::MatrixXcd h_prev_;
  bool have_prev_ = false;
  bool diagonal_ = false;
  bool blocked_ = false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver_;
  std::vector<Eigen::MatrixXcd> block_vectors_;
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXcd phases_;
  Eigen::MatrixXcd u_;
  double max_abs_ = 0.0;
  double dt_cached_ = std::numeric_limits<double>::quiet_NaN();
};

struct RecordSink {
  Trajectory traj;
  const Recorder* rec;
  const PropagationOptions* opts;
  std::vector<double> checkpoints;  // sorted, not yet taken
  Eigen::VectorXd row;

  RecordSink(const Recorder& r, const PropagationOptions& o)
      : rec(&r), opts(&o), checkpoints(o.checkpoint_times) {
    std::sort(checkpoints.begin(), checkpoints.end());
    traj.columns = r.columns;
    row.resize(static_cast<int>(r.columns.size()));
  }

  void record(double t, const QuantumState& s) {
    s.check();
    if (opts->enforce_watchdog && s.basis()->j_max() >= 4) {
      const double leak = top_shell_population(s);
      if (leak > opts->watchdog_threshold) {
        throw TruncationError(
            "truncation watchdog: top two j-shells hold " + std::to_string(leak) +
            " population at t = " + std::to_string(t) + "; enlarge j_max");
      }
    }
    if (!rec->columns.empty()) {
      rec->eval(t, s, row);
      traj.rows.push_back(row);
    } else {
      traj.rows.emplace_back();
    }
    traj.times.push_back(t);
    while (!checkpoints.empty() && checkpoints.front() <= t + 1e-12) {
      traj.checkpoints.emplace_back(t, s);
      checkpoints.erase(checkpoints.begin());
    }
  }
};

template <typename Payload>
Trajectory run_unitary(const QuantumState& initial, const HamiltonianFn& h_of_t,
                       const TimeGrid& grid, const Recorder& rec,
                       const PropagationOptions& opts, Payload& payload,
                       QuantumState (*wrap)(std::shared_ptr<const BasisSet>,
                                            Payload)) {
  grid.validate();
  const int n = initial.basis()->dimension();
  StepPropagator stepper(*initial.basis());
  Eigen::MatrixXcd h(n, n);
  RecordSink sink(rec, opts);

  const int nsteps = grid.steps();
  double t = grid.t_start;
  sink.record(t, initial);
  for (int i = 0; i < nsteps; ++i) {
    const double t_next = (i + 1 == nsteps) ? grid.t_end
                                            : grid.t_start + (i + 1) * grid.dt;
    const double h_step = t_next - t;
    h_of_t(t + 0.5 * h_step, h);
    stepper.prepare(h, h_step, opts.max_phase_per_step);
    stepper.apply(payload);
    t = t_next;
    if ((i + 1) % grid.output_every == 0 || i + 1 == nsteps) {
      sink.record(t, wrap(initial.basis(), payload));
    }
  }
  return std::move(sink.traj);
}

QuantumState wrap_pure(std::shared_ptr<const BasisSet> b, Eigen::VectorXcd psi) {
  return QuantumState::pure(std::move(b), std::move(psi));
}
QuantumState wrap_mixed(std::shared_ptr<const BasisSet> b, Eigen::MatrixXcd rho) {
  return QuantumState::mixed(std::move(b), std::move(rho));
}

}  // namespace

Trajectory propagate_schrodinger(const QuantumState& initial,
                                 const HamiltonianFn& h_of_t,
                                 const TimeGrid& grid, const Recorder& rec,
                                 const PropagationOptions& opts) {
  if (!initial.is_pure()) {
    throw std::invalid_argument("propagate_schrodinger: pure states only");
  }
  Eigen::VectorXcd psi = initial.vector();
  return run_unitary(initial, h_of_t, grid, rec, opts, psi, &wrap_pure);
}

Trajectory propagate_lvn(const QuantumState& initial, const HamiltonianFn& h_of_t,
                         const TimeGrid& grid, const Recorder& rec,
                         const PropagationOptions& opts) {
  Eigen::MatrixXcd rho = initial.to_density();
  return run_unitary(initial, h_of_t, grid, rec, opts, rho, &wrap_mixed);
}

// ------------------------------------------------------------------- Lindblad

namespace {

class LindbladRhs {
 public:
  LindbladRhs(const HamiltonianFn& h_of_t, const DissipatorSet& d, int n)
      : h_of_t_(h_of_t), h_(n, n), reset_gamma_(d.reset_gamma),
        reset_target_(d.reset_target) {
    for (const auto& L : d.collapse_ops) {
      if (L.rows() != n || L.cols() != n) {
        throw std::invalid_argument("collapse operator dimension mismatch");
      }
      if (is_diagonal(L)) {
        if (rate_.size() == 0) rate_ = Eigen::MatrixXcd::Zero(n, n);
        const Eigen::VectorXcd l = L.diagonal();
        for (int a = 0; a < n; ++a) {
          for (int b = 0; b < n; ++b) {
            rate_(a, b) += l[a] * std::conj(l[b]) -
                           0.5 * (std::norm(l[a]) + std::norm(l[b]));
          }
        }
      } else {
        ops_.push_back(L);
        opsq_.push_back((L.adjoint() * L).eval());
      }
    }
    if (reset_gamma_ != 0.0 &&
        (reset_target_.rows() != n || reset_target_.cols() != n)) {
      throw std::invalid_argument("reset target dimension mismatch");
    }
  }

  void operator()(double t, const Eigen::MatrixXcd& rho,
                  Eigen::MatrixXcd& drho) {
    h_of_t_(t, h_);
    drho.noalias() = -kI * (h_ * rho - rho * h_);
    if (rate_.size() != 0) drho.array() += rate_.array() * rho.array();
    for (std::size_t k = 0; k < ops_.size(); ++k) {
      drho.noalias() += ops_[k] * rho * ops_[k].adjoint();
      drho.noalias() -= 0.5 * (opsq_[k] * rho + rho * opsq_[k]);
    }
    if (reset_gamma_ != 0.0) {
      drho += reset_gamma_ * (rho.trace() * reset_target_ - rho);
    }
  }

 private:
  const HamiltonianFn& h_of_t_;
  Eigen::MatrixXcd h_;
  Eigen::MatrixXcd rate_;  // folded diagonal collapse ops
  std::vector<Eigen::MatrixXcd> ops_, opsq_;
  double reset_gamma_;
  Eigen::MatrixXcd reset_target_;
};

void rk4_step(LindbladRhs& rhs, double t, double h, const Eigen::MatrixXcd& rho,
              Eigen::MatrixXcd& out) {
  Eigen::MatrixXcd k1, k2, k3, k4;
  rhs(t, rho, k1);
  rhs(t + 0.5 * h, (rho + 0.5 * h * k1).eval(), k2);
  rhs(t + 0.5 * h, (rho + 0.5 * h * k2).eval(), k3);
  rhs(t + h, (rho + h * k3).eval(), k4);
  out = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// step doubling: accepts the two-half-step result once the discrepancy with
// the full step is within tol
void rk4_adaptive(LindbladRhs& rhs, double t, double h, Eigen::MatrixXcd& rho,
                  double tol, int depth) {
  Eigen::MatrixXcd full, half1, half2;
  rk4_step(rhs, t, h, rho, full);
  rk4_step(rhs, t, 0.5 * h, rho, half1);
  rk4_step(rhs, t + 0.5 * h, 0.5 * h, half1, half2);
  const double err = (full - half2).norm();
  if (err <= tol || depth >= 24) {
    rho = std::move(half2);
    return;
  }
  rk4_adaptive(rhs, t, 0.5 * h, rho, tol, depth + 1);
  rk4_adaptive(rhs, t + 0.5 * h, 0.5 * h, rho, tol, depth + 1);
}

}  // namespace

Trajectory propagate_lindblad(const QuantumState& initial,
                              const HamiltonianFn& h_of_t,
                              const DissipatorSet& dissipators,
                              const TimeGrid& grid, const Recorder& rec,
                              const PropagationOptions& opts) {
  grid.validate();
  const int n = initial.basis()->dimension();
  LindbladRhs rhs(h_of_t, dissipators, n);
  Eigen::MatrixXcd rho = initial.to_density();
  RecordSink sink(rec, opts);

  const int nsteps = grid.steps();
  double t = grid.t_start;

  auto record_with_positivity = [&](double at) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho,
                                                       Eigen::EigenvaluesOnly);
    const double min_ev = es.eigenvalues().minCoeff();
    if (min_ev < -opts.positivity_tol) {
      throw PositivityError("density matrix eigenvalue " +
                            std::to_string(min_ev) + " below -" +
                            std::to_string(opts.positivity_tol) + " at t = " +
                            std::to_string(at));
    }
    sink.record(at, QuantumState::mixed(initial.basis(), rho));
  };

  record_with_positivity(t);
  for (int i = 0; i < nsteps; ++i) {
    const double t_next = (i + 1 == nsteps) ? grid.t_end
                                            : grid.t_start + (i + 1) * grid.dt;
    rk4_adaptive(rhs, t, t_next - t, rho, opts.lindblad_step_tol, 0);
    t = t_next;
    if ((i + 1) % grid.output_every == 0 || i + 1 == nsteps) {
      record_with_positivity(t);
    }
  }
  return std::move(sink.traj);
}

Trajectory propagate_lindblad(const QuantumState& initial,
                              const HamiltonianFn& h_of_t,
                              const std::vector<Eigen::MatrixXcd>& collapse_ops,
                              const TimeGrid& grid, const Recorder& rec,
                              const PropagationOptions& opts) {
  DissipatorSet d;
  d.collapse_ops = collapse_ops;
  return propagate_lindblad(initial, h_of_t, d, grid, rec, opts);
}

Eigen::MatrixXcd make_dephasing_op(const BasisSet& basis, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("make_dephasing_op: gamma < 0");
  const int n = basis.dimension();
  const double scale = std::max(1, basis.j_max() * (basis.j_max() + 1));
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const RotorKet& s = basis.state_at(i);
    L(i, i) = std::sqrt(gamma) * (s.j * (s.j + 1.0)) / scale;
  }
  return L;
}

// ------------------------------------------------------------- FreeEvolution

FreeEvolution::FreeEvolution(const Operator& h0) : basis_(h0.basis) {
  if (is_diagonal(h0.mat)) {
    diagonal_ = true;
    eigenvalues_ = h0.mat.diagonal().real();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h0.mat);
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }
  max_abs_ = eigenvalues_.size() ? eigenvalues_.cwiseAbs().maxCoeff() : 0.0;
}

void FreeEvolution::advance(Eigen::VectorXcd& psi, double dt) const {
  if (dt == 0.0) return;
  Eigen::VectorXcd phases(eigenvalues_.size());
  for (int i = 0; i < eigenvalues_.size(); ++i) {
    phases[i] = std::polar(1.0, -eigenvalues_[i] * dt);
  }
  if (diagonal_) {
    psi.array() *= phases.array();
  } else {
    psi = eigenvectors_ * (phases.array() * (eigenvectors_.adjoint() * psi).array()).matrix();
  }
}

void FreeEvolution::advance(Eigen::MatrixXcd& rho, double dt) const {
  if (dt == 0.0) return;
  Eigen::VectorXcd phases(eigenvalues_.size());
  for (int i = 0; i < eigenvalues_.size(); ++i) {
    phases[i] = std::polar(1.0, -eigenvalues_[i] * dt);
  }
  if (diagonal_) {
    rho = phases.asDiagonal() * rho * phases.conjugate().asDiagonal();
  } else {
    const Eigen::MatrixXcd u =
        eigenvectors_ * phases.asDiagonal() * eigenvectors_.adjoint();
    rho = u * rho * u.adjoint();
  }
}

double top_shell_population(const QuantumState& state, int shells) {
  const BasisSet& basis = *state.basis();
  const Eigen::VectorXd pop = state.populations();
  const int j_lo = basis.j_max() - (shells - 1);
  double total = 0.0;
  for (int i = 0; i < basis.dimension(); ++i) {
    if (basis.state_at(i).j >= j_lo) total += pop[i];
  }
  return total;
}

// -------------------------------------------------- TimeDependentHamiltonian

TimeDependentHamiltonian::TimeDependentHamiltonian(
    const RotorSpec& spec, std::shared_ptr<const BasisSet> basis,
    const std::vector<PulseSpec>& pulses, const InteractionOptions& opts)
    : basis_(basis), h0_(free_hamiltonian(spec, basis)) {
  const double da = spec.delta_alpha();
  const double aperp = spec.alpha_perp;
  const double mu = spec.mu0;

  std::map<std::string, Eigen::MatrixXcd> cache;
  auto cos_mat = [&](SpaceAxis K) -> const Eigen::MatrixXcd& {
    const std::string key = "c" + std::to_string(static_cast<int>(K));
    auto it = cache.find(key);
    if (it == cache.end()) {
      Operator op = direction_cosine(basis_, K);
      if (!op.meta.m_diagonal()) m_conserving_ = false;
      it = cache.emplace(key, std::move(op.mat)).first;
    }
    return it->second;
  };
  auto cos2_mat = [&](SpaceAxis K, SpaceAxis Kp) -> const Eigen::MatrixXcd& {
    const int a = std::min(static_cast<int>(K), static_cast<int>(Kp));
    const int b = std::max(static_cast<int>(K), static_cast<int>(Kp));
    const std::string key = "p" + std::to_string(a) + std::to_string(b);
    auto it = cache.find(key);
    if (it == cache.end()) {
      Operator op = cos_product(basis_, static_cast<SpaceAxis>(a),
                                static_cast<SpaceAxis>(b));
      if (!op.meta.m_diagonal()) m_conserving_ = false;
      it = cache.emplace(key, std::move(op.mat)).first;
    }
    return it->second;
  };
  auto identity_mat = [&]() -> const Eigen::MatrixXcd& {
    auto it = cache.find("id");
    if (it == cache.end()) {
      it = cache
               .emplace("id", Eigen::MatrixXcd::Identity(basis_->dimension(),
                                                         basis_->dimension()))
               .first;
    }
    return it->second;
  };

  const std::array<SpaceAxis, 3> axes{SpaceAxis::X, SpaceAxis::Y, SpaceAxis::Z};

  for (const PulseSpec& pulse : pulses) {
    validate(pulse);
    if (const auto* train = std::get_if<KickTrain>(&pulse)) {
      for (int i = 0; i < train->count; ++i) {
        kicks_.emplace_back(train->t_first + i * train->period, train->strength);
      }
      continue;
    }
    const int pi = static_cast<int>(continuous_.size());
    continuous_.push_back(pulse);

    auto add = [&](const Eigen::MatrixXcd& m,
                   std::function<double(const FieldSample&)> c) {
      terms_.push_back(Term{m, std::move(c), pi});
    };

    if (const auto* g = std::get_if<GaussianPulse>(&pulse)) {
      for (SpaceAxis K : axes) {
        const int k = static_cast<int>(K);
        if (g->peak[k] == 0.0) continue;
        if (g->mode == CarrierMode::Averaged) {
          add(cos2_mat(K, K), [k, da](const FieldSample& f) {
            return -0.25 * da * f.amplitude[k] * f.amplitude[k];
          });
        } else {
          add(cos_mat(K), [k, mu](const FieldSample& f) {
            return -mu * f.amplitude[k];
          });
          add(cos2_mat(K, K), [k, da](const FieldSample& f) {
            return -0.5 * da * f.amplitude[k] * f.amplitude[k];
          });
        }
      }
      if (opts.keep_isotropic_shift && aperp != 0.0) {
        const double scale = g->mode == CarrierMode::Averaged ? 0.25 : 0.5;
        add(identity_mat(), [aperp, scale](const FieldSample& f) {
          double s = 0.0;
          for (double a : f.amplitude) s += a * a;
          return -scale * aperp * s;
        });
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
          if (g->peak[a] == 0.0 || g->peak[b] == 0.0) continue;
          const double scale = g->mode == CarrierMode::Averaged
                                   ? std::cos(g->phase[a] - g->phase[b])
                                   : 2.0;
          add(cos2_mat(static_cast<SpaceAxis>(a), static_cast<SpaceAxis>(b)),
              [a, b, da, scale](const FieldSample& f) {
                return -scale * da * f.amplitude[a] * f.amplitude[b];
              });
        }
      }
    } else if (const auto* tc = std::get_if<TwoColorPulse>(&pulse)) {
      if (basis_->top() != TopClass::Linear) {
        throw std::invalid_argument(
            "two-color pulses act on linear molecules only");
      }
      add(cos2_mat(SpaceAxis::Z, SpaceAxis::Z), [da](const FieldSample& f) {
        return -0.25 * da * (f.e1 * f.e1 + f.e2 * f.e2);
      });
      if (opts.keep_isotropic_shift && aperp != 0.0) {
        add(identity_mat(), [aperp](const FieldSample& f) {
          return -0.25 * aperp * (f.e1 * f.e1 + f.e2 * f.e2);
        });
      }
      const double b_par = spec.beta_par, b_perp = spec.beta_perp;
      if (b_par != 0.0 || b_perp != 0.0) {
        Operator c3 = cos_cubed(basis_);
        add(c3.mat, [b_par, b_perp](const FieldSample& f) {
          return -0.125 * std::cos(f.phi) * (b_par - 3.0 * b_perp) * f.e1 *
                 f.e1 * f.e2;
        });
        add(cos_mat(SpaceAxis::Z), [b_perp](const FieldSample& f) {
          return -0.125 * std::cos(f.phi) * 3.0 * b_perp * f.e1 * f.e1 * f.e2;
        });
      }
    } else if (std::get_if<HalfCyclePulse>(&pulse) != nullptr) {
      add(cos_mat(SpaceAxis::Z),
          [mu](const FieldSample& f) { return -mu * f.amplitude[2]; });
      if (da != 0.0) {
        add(cos2_mat(SpaceAxis::Z, SpaceAxis::Z), [da](const FieldSample& f) {
          return -0.5 * da * f.amplitude[2] * f.amplitude[2];
        });
      }
      if (opts.keep_isotropic_shift && aperp != 0.0) {
        add(identity_mat(), [aperp](const FieldSample& f) {
          return -0.5 * aperp * f.amplitude[2] * f.amplitude[2];
        });
      }
    } else if (std::get_if<RampPulse>(&pulse) != nullptr) {
      add(cos2_mat(SpaceAxis::Z, SpaceAxis::Z), [da](const FieldSample& f) {
        return -0.25 * da * f.amplitude[2] * f.amplitude[2];
      });
      if (opts.keep_isotropic_shift && aperp != 0.0) {
        add(identity_mat(), [aperp](const FieldSample& f) {
          return -0.25 * aperp * f.amplitude[2] * f.amplitude[2];
        });
      }
    }
  }

  std::sort(kicks_.begin(), kicks_.end());

  // merged field windows
  std::vector<std::pair<double, double>> spans;
  for (const PulseSpec& p : continuous_) spans.push_back(support(p));
  std::sort(spans.begin(), spans.end());
  for (const auto& s : spans) {
    if (!windows_.empty() && s.first <= windows_.back().second) {
      windows_.back().second = std::max(windows_.back().second, s.second);
    } else {
      windows_.push_back(s);
    }
  }
}

void TimeDependentHamiltonian::assemble(double t, Eigen::MatrixXcd& h) const {
  h = h0_.mat;
  int last_pulse = -1;
  FieldSample fs;
  for (const Term& term : terms_) {
    if (term.pulse_index != last_pulse) {
      fs = sample(continuous_[term.pulse_index], t);
      last_pulse = term.pulse_index;
    }
    const double c = term.coeff(fs);
    if (c != 0.0) h.noalias() += c * term.mat;
  }
}

HamiltonianFn TimeDependentHamiltonian::as_fn() const {
  return [this](double t, Eigen::MatrixXcd& h) { assemble(t, h); };
}

bool TimeDependentHamiltonian::has_field(double t) const {
  for (const auto& w : windows_) {
    if (t >= w.first && t <= w.second) return true;
  }
  return false;
}

// ------------------------------------------------------------ pulse schedule

namespace {

class PulsedEngine {
 public:
  PulsedEngine(const QuantumState& initial, const RotorSpec& spec,
               const std::vector<PulseSpec>& pulses,
               const PulsedRunSettings& settings)
      : basis_(initial.basis()),
        ham_(spec, basis_, pulses, settings.interaction),
        free_(ham_.h0()),
        settings_(settings),
        lindblad_(settings.lindblad || !settings.dissipators.collapse_ops.empty() ||
                  settings.dissipators.reset_gamma != 0.0),
        stepper_(*basis_),
        h_buf_(basis_->dimension(), basis_->dimension()) {
    if (lindblad_ || !initial.is_pure()) {
      rho_ = initial.to_density();
      pure_ = false;
    } else {
      psi_ = initial.vector();
      pure_ = true;
    }
    if (lindblad_) {
      rhs_ = std::make_unique<LindbladRhs>(ham_fn_, settings_.dissipators,
                                           basis_->dimension());
    }
  }

  Trajectory run(const Recorder& rec) {
    RecordSink sink(rec, settings_.prop);
    double t = settings_.t_start;
    std::size_t next_kick = 0;
    const auto& kicks = ham_.kicks();
    while (next_kick < kicks.size() && kicks[next_kick].first < t - 1e-12) {
      ++next_kick;  // kicks before the start never fire
    }

    for (double t_out : settings_.output_times) {
      if (t_out < t - 1e-12) {
        throw std::invalid_argument("propagate_pulsed: unsorted output times");
      }
      while (true) {
        apply_due_kicks(kicks, next_kick, t);
        const double t_stop = (next_kick < kicks.size())
                                  ? std::min(kicks[next_kick].first, t_out)
                                  : t_out;
        if (t_stop > t + 1e-15) advance_continuous(t, t_stop);
        t = t_stop;
        if (t >= t_out - 1e-12) break;
      }
      apply_due_kicks(kicks, next_kick, t);
      sink.record(t_out, current_state());
    }
    return std::move(sink.traj);
  }

 private:
  QuantumState current_state() const {
    if (pure_) return QuantumState::pure(basis_, psi_);
    return QuantumState::mixed(basis_, rho_);
  }

  void apply_due_kicks(const std::vector<std::pair<double, double>>& kicks,
                       std::size_t& next_kick, double t) {
    while (next_kick < kicks.size() && kicks[next_kick].first <= t + 1e-12) {
      const double strength = kicks[next_kick].second;
      auto it = kick_cache_.find(strength);
      if (it == kick_cache_.end()) {
        it = kick_cache_.emplace(strength, sudden_propagator(basis_, strength))
                 .first;
      }
      if (pure_) {
        psi_ = it->second.mat * psi_;
      } else {
        rho_ = it->second.mat * rho_ * it->second.mat.adjoint();
      }
      ++next_kick;
    }
  }

  void advance_continuous(double t0, double t1) {
    if (lindblad_) {
      step_window(t0, t1);
      return;
    }
    // split [t0, t1] by the field windows; jump the free parts
    double t = t0;
    for (const auto& w : ham_.field_windows()) {
      if (w.second <= t || w.first >= t1) continue;
      const double a = std::max(t, w.first);
      const double b = std::min(t1, w.second);
      if (a > t) jump_free(t, a);
      step_window(a, b);
      t = b;
    }
    if (t < t1) jump_free(t, t1);
  }

  void jump_free(double t0, double t1) {
    if (pure_) {
      free_.advance(psi_, t1 - t0);
    } else {
      free_.advance(rho_, t1 - t0);
    }
  }

  void step_window(double t0, double t1) {
    const int nsteps =
        std::max(1, static_cast<int>(std::ceil((t1 - t0) / settings_.step_dt - 1e-9)));
    double t = t0;
    for (int i = 0; i < nsteps; ++i) {
      const double t_next = (i + 1 == nsteps) ? t1 : t0 + (i + 1) * (t1 - t0) / nsteps;
      if (lindblad_) {
        rk4_adaptive(*rhs_, t, t_next - t, rho_,
                     settings_.prop.lindblad_step_tol, 0);
      } else {
        ham_.assemble(0.5 * (t + t_next), h_buf_);
        stepper_.prepare(h_buf_, t_next - t, settings_.prop.max_phase_per_step);
        if (pure_) {
          stepper_.apply(psi_);
        } else {
          stepper_.apply(rho_);
        }
      }
      t = t_next;
    }
  }

  std::shared_ptr<const BasisSet> basis_;
  TimeDependentHamiltonian ham_;
  HamiltonianFn ham_fn_ = ham_.as_fn();
  FreeEvolution free_;
  PulsedRunSettings settings_;
  bool lindblad_;
  bool pure_ = true;
  Eigen::VectorXcd psi_;
  Eigen::MatrixXcd rho_;
  StepPropagator stepper_;
  Eigen::MatrixXcd h_buf_;
  std::map<double, Unitary> kick_cache_;
  std::unique_ptr<LindbladRhs> rhs_;
};

}  // namespace

Trajectory propagate_pulsed(const QuantumState& initial, const RotorSpec& spec,
                            const std::vector<PulseSpec>& pulses,
                            const PulsedRunSettings& settings,
                            const Recorder& rec) {
  if (settings.output_times.empty()) {
    throw std::invalid_argument("propagate_pulsed: no output times");
  }
  PulsedEngine engine(initial, spec, pulses, settings);
  return engine.run(rec);
}

}  // namespace rotorsim
