#include "rotorsim/scenarios.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "rotorsim/classical.hpp"
#include "rotorsim/constants.hpp"
#include "rotorsim/control.hpp"
#include "rotorsim/csv.hpp"
#include "rotorsim/dynamics.hpp"
#include "rotorsim/observables.hpp"
#include "rotorsim/state_io.hpp"

namespace rotorsim {

namespace {

using nlohmann::json;

int thread_count_impl() {
  if (const char* env = std::getenv("ROTORSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return std::min(n, 64);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(4u, std::max(1u, hw)));
}

// index-sharded loop; tasks write into preallocated slots so the result is
// independent of scheduling
void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min(scenario_thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct Ctx {
  RunConfig cfg;
  std::string scenario;
  std::filesystem::path out;
  json summary;
  json plots = json::array();

  std::string comment() const {
    return std::string(kToolName) + " " + kVersion + " scenario=" + scenario +
           " config=" + cfg.config_hash + " seed=" + std::to_string(cfg.seed);
  }

  void add_plot(const std::string& file, const std::string& x,
                const std::vector<std::string>& y, const std::string& title) {
    plots.push_back({{"file", file}, {"x", x}, {"y", y}, {"title", title}});
  }

  void finish() {
    summary["scenario"] = scenario;
    summary["version"] = kVersion;
    summary["config_hash"] = cfg.config_hash;
    summary["seed"] = cfg.seed;
    std::ofstream s(out / "summary.json", std::ios::binary | std::ios::trunc);
    s << summary.dump(2) << "\n";
    std::ofstream p(out / "plots.json", std::ios::binary | std::ios::trunc);
    p << json{{"plots", plots}}.dump(2) << "\n";
  }
};

double revival_period(const RunConfig& cfg) {
  if (cfg.rotor.B <= 0.0) return 1.0;
  return kPi / cfg.rotor.B;
}

std::vector<double> uniform_times(double lo, double hi, int count) {
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) t[i] = lo + (hi - lo) * i / (count - 1);
  return t;
}

json feature_json(const std::vector<Feature>& features) {
  json arr = json::array();
  for (const auto& f : features) {
    arr.push_back({{"time", f.time},
                   {"value", f.value},
                   {"kind", f.kind == Feature::Kind::Peak ? "peak" : "trough"}});
  }
  return arr;
}

// ------------------------------------------------------------------ ensembles

struct Member {
  RotorKet ket;
  double weight;
};

// diagonal-class thermal decomposition (linear / symmetric / spherical)
std::vector<Member> thermal_members(const RunConfig& cfg,
                                    const std::shared_ptr<const BasisSet>& basis,
                                    double cutoff = 1e-12) {
  const QuantumState th = thermal_state(cfg.rotor, basis, cfg.temperature);
  const Eigen::VectorXd pop = th.populations();
  std::vector<Member> members;
  for (int i = 0; i < basis->dimension(); ++i) {
    if (pop[i] > cutoff) members.push_back({basis->state_at(i), pop[i]});
  }
  // exact unit total so ensemble averages stay normalized
  double total = 0.0;
  for (const auto& m : members) total += m.weight;
  for (auto& m : members) m.weight /= total;
  return members;
}

struct EnsembleSeries {
  std::vector<double> times;
  std::vector<std::string> columns;
  std::vector<Eigen::VectorXd> rows;  // weighted sums
};

// Weighted time series of the standard observable block for a thermal
// (or pure) initial state under a pulse schedule. Members propagate in
// their m-restricted blocks when every pulse conserves m.
class EnsembleRunner {
 public:
  EnsembleRunner(const RunConfig& cfg, std::shared_ptr<const BasisSet> basis)
      : cfg_(cfg), basis_(std::move(basis)) {
    TimeDependentHamiltonian probe(cfg_.rotor, basis_, cfg_.pulses);
    m_conserving_ = probe.m_conserving();
  }

  bool dissipative() const {
    return cfg_.lindblad || cfg_.dephasing_gamma > 0.0 || cfg_.reset_gamma > 0.0;
  }

  EnsembleSeries run(const std::vector<PulseSpec>& pulses,
                     const std::vector<double>& output_times,
                     bool with_autocorr) {
    EnsembleSeries series;
    series.times = output_times;
    series.columns = {"cos_z", "cos2_x", "cos2_y", "cos2_z", "energy", "j2"};
    if (with_autocorr) series.columns.push_back("autocorr");

    std::vector<Member> members;
    if (cfg_.thermal) {
      if (with_autocorr) {
        throw ConfigError("autocorr output is defined for pure initial states");
      }
      if (basis_->top() == TopClass::Asymmetric || !m_conserving_) {
        return run_density(pulses, output_times);
      }
      members = thermal_members(cfg_, basis_);
    } else {
      const int idx = basis_->index_of(cfg_.pure_state);
      if (idx < 0) throw ConfigError("initial pure state not in basis");
      members = {{cfg_.pure_state, 1.0}};
      if (dissipative() || !m_conserving_) {
        return run_density(pulses, output_times, with_autocorr);
      }
    }

    if (dissipative()) return run_density_blocks(pulses, output_times, members);

    // pure members, one m-block each
    prepare_block_observables(members);
    std::vector<std::vector<Eigen::VectorXd>> slots(members.size());
    parallel_for(static_cast<int>(members.size()), [&](int i) {
      slots[i] = run_pure_member(members[i], pulses, output_times, with_autocorr);
    });
    accumulate(series, members, slots);
    finish_series(series, cfg_.watchdog);
    return series;
  }

 private:
  void prepare_block_observables(const std::vector<Member>& members) {
    for (const auto& m : members) {
      const int key = m_conserving_ ? m.ket.m : 0;
      if (!blocks_.count(key)) {
        auto sub = m_conserving_ ? basis_->m_restricted(m.ket.m) : basis_;
        blocks_.emplace(key, BlockData{sub, ObservableSet::build(cfg_.rotor, sub)});
      }
    }
  }

  struct BlockData {
    std::shared_ptr<const BasisSet> basis;
    ObservableSet obs;
  };

  // the trailing "topshell" column is internal: members propagate with the
  // per-state watchdog off and the ensemble-summed value is checked instead
  Recorder make_recorder(const BlockData& block, bool with_autocorr,
                         std::shared_ptr<Eigen::VectorXcd> ref) const {
    std::vector<std::string> cols{"cos_z", "cos2_x", "cos2_y",
                                  "cos2_z", "energy", "j2"};
    if (with_autocorr) cols.push_back("autocorr");
    cols.push_back("topshell");
    const ObservableSet* obs = &block.obs;
    const int top_col = static_cast<int>(cols.size()) - 1;
    return Recorder{
        cols, [obs, with_autocorr, ref, top_col](double, const QuantumState& s,
                                                 Eigen::VectorXd& row) {
          row[0] = expectation(obs->cos_z, s);
          row[1] = expectation(obs->cos2_x, s);
          row[2] = expectation(obs->cos2_y, s);
          row[3] = expectation(obs->cos2_z, s);
          row[4] = expectation(obs->h0, s);
          row[5] = expectation(obs->j2, s);
          if (with_autocorr) {
            if (ref->size() == 0) *ref = s.vector();
            row[6] = std::abs(ref->dot(s.vector()));
          }
          row[top_col] = top_shell_population(s);
        }};
  }

  // aggregate truncation check, then drop the internal column
  void finish_series(EnsembleSeries& series, double watchdog) const {
    const int top_col = static_cast<int>(series.columns.size());
    for (std::size_t r = 0; r < series.rows.size(); ++r) {
      const double leak = series.rows[r][top_col];
      if (leak > watchdog) {
        throw TruncationError(
            "truncation watchdog: ensemble top two j-shells hold " +
            std::to_string(leak) + " population at t = " +
            std::to_string(series.times[r]) + "; enlarge j_max");
      }
      series.rows[r] = series.rows[r].head(top_col).eval();
    }
  }

  PulsedRunSettings make_settings(const std::vector<double>& output_times,
                                  bool member_run) const {
    PulsedRunSettings st;
    st.t_start = cfg_.t_start;
    st.output_times = output_times;
    st.step_dt = cfg_.dt;
    st.prop.watchdog_threshold = cfg_.watchdog;
    st.prop.enforce_watchdog = !member_run;
    st.interaction.keep_isotropic_shift = cfg_.keep_isotropic_shift;
    return st;
  }

  std::vector<Eigen::VectorXd> run_pure_member(
      const Member& member, const std::vector<PulseSpec>& pulses,
      const std::vector<double>& output_times, bool with_autocorr) {
    const BlockData& block = blocks_.at(m_conserving_ ? member.ket.m : 0);
    const int idx = block.basis->index_of(member.ket);
    QuantumState s0 = QuantumState::pure(block.basis, idx);
    auto ref = std::make_shared<Eigen::VectorXcd>();
    Trajectory traj = propagate_pulsed(s0, cfg_.rotor, pulses,
                                       make_settings(output_times, true),
                                       make_recorder(block, with_autocorr, ref));
    return traj.rows;
  }

  DissipatorSet make_dissipators(const std::shared_ptr<const BasisSet>& basis,
                                 double block_weight) const {
    DissipatorSet d;
    if (cfg_.dephasing_gamma > 0.0) {
      d.collapse_ops.push_back(make_dephasing_op(*basis, cfg_.dephasing_gamma));
    }
    if (cfg_.reset_gamma > 0.0) {
      const double t_reset = cfg_.reset_temperature >= 0.0
                                 ? cfg_.reset_temperature
                                 : cfg_.temperature;
      d.reset_gamma = cfg_.reset_gamma;
      d.reset_target = thermal_state(cfg_.rotor, basis, t_reset).density() /
                       std::max(block_weight, 1e-300) * block_weight;
      // normalized within the block; trace handled by the caller
      d.reset_target /= d.reset_target.trace().real();
    }
    return d;
  }

  // full-basis density path (asymmetric tops or m-mixing fields)
  EnsembleSeries run_density(const std::vector<PulseSpec>& pulses,
                             const std::vector<double>& output_times,
                             bool with_autocorr = false) {
    EnsembleSeries series;
    series.times = output_times;
    series.columns = {"cos_z", "cos2_x", "cos2_y", "cos2_z", "energy", "j2"};
    if (with_autocorr) series.columns.push_back("autocorr");

    BlockData block{basis_, ObservableSet::build(cfg_.rotor, basis_)};
    QuantumState s0 =
        cfg_.thermal ? thermal_state(cfg_.rotor, basis_, cfg_.temperature)
                     : QuantumState::pure(basis_, basis_->index_of(cfg_.pure_state));

    PulsedRunSettings st = make_settings(output_times, false);
    if (dissipative()) {
      st.lindblad = true;
      st.dissipators = make_dissipators(basis_, 1.0);
      if (with_autocorr) {
        throw ConfigError("autocorr output requires unitary dynamics");
      }
    }
    auto ref = std::make_shared<Eigen::VectorXcd>();
    Trajectory traj = propagate_pulsed(s0, cfg_.rotor, pulses, st,
                                       make_recorder(block, with_autocorr, ref));
    series.rows = traj.rows;
    finish_series(series, cfg_.watchdog);
    return series;
  }

  // dissipative thermal runs decomposed into m-blocks (valid because the
  // shipped dissipator models are m-diagonal)
  EnsembleSeries run_density_blocks(const std::vector<PulseSpec>& pulses,
                                    const std::vector<double>& output_times,
                                    const std::vector<Member>& members) {
    std::map<int, double> block_weight;
    for (const auto& m : members) block_weight[m.ket.m] += m.weight;
    std::vector<std::pair<int, double>> blocks(block_weight.begin(),
                                               block_weight.end());

    prepare_block_members(blocks);
    std::vector<std::vector<Eigen::VectorXd>> slots(blocks.size());
    parallel_for(static_cast<int>(blocks.size()), [&](int bi) {
      const int m = blocks[bi].first;
      const BlockData& block = blocks_.at(m);
      // normalized thermal sub-state for this m
      const QuantumState th = thermal_state(cfg_.rotor, basis_, cfg_.temperature);
      const Eigen::VectorXd pop = th.populations();
      Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(block.basis->dimension(),
                                                    block.basis->dimension());
      double tr = 0.0;
      for (int i = 0; i < block.basis->dimension(); ++i) {
        const int full = basis_->index_of(block.basis->state_at(i));
        rho(i, i) = pop[full];
        tr += pop[full];
      }
      rho /= tr;
      PulsedRunSettings st = make_settings(output_times, true);
      st.lindblad = true;
      st.dissipators = make_dissipators(block.basis, blocks[bi].second);
      auto ref = std::make_shared<Eigen::VectorXcd>();
      Trajectory traj = propagate_pulsed(QuantumState::mixed(block.basis, rho),
                                         cfg_.rotor, pulses, st,
                                         make_recorder(block, false, ref));
      slots[bi] = traj.rows;
    });

    EnsembleSeries series;
    series.times = output_times;
    series.columns = {"cos_z", "cos2_x", "cos2_y", "cos2_z", "energy", "j2"};
    series.rows.assign(output_times.size(),
                       Eigen::VectorXd::Zero(series.columns.size() + 1));
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      for (std::size_t r = 0; r < series.rows.size(); ++r) {
        series.rows[r] += blocks[bi].second * slots[bi][r];
      }
    }
    finish_series(series, cfg_.watchdog);
    return series;
  }

  void prepare_block_members(const std::vector<std::pair<int, double>>& blocks) {
    for (const auto& [m, w] : blocks) {
      if (!blocks_.count(m)) {
        auto sub = basis_->m_restricted(m);
        blocks_.emplace(m, BlockData{sub, ObservableSet::build(cfg_.rotor, sub)});
      }
    }
  }

  void accumulate(EnsembleSeries& series, const std::vector<Member>& members,
                  const std::vector<std::vector<Eigen::VectorXd>>& slots) const {
    series.rows.assign(series.times.size(),
                       Eigen::VectorXd::Zero(series.columns.size() + 1));
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t r = 0; r < series.rows.size(); ++r) {
        series.rows[r] += members[i].weight * slots[i][r];
      }
    }
  }

  const RunConfig& cfg_;
  std::shared_ptr<const BasisSet> basis_;
  bool m_conserving_ = true;
  std::map<int, BlockData> blocks_;
};

// --------------------------------------------------------------- align scenario

void write_series_csv(Ctx& ctx, const std::string& filename,
                      const EnsembleSeries& series) {
  std::vector<std::string> cols{"t_ps", "cos_z", "cos2_x", "cos2_y",
                                "cos2_z", "energy", "j2", "sumrule_residual"};
  const bool autocorr = std::find(series.columns.begin(), series.columns.end(),
                                  "autocorr") != series.columns.end();
  if (autocorr) cols.push_back("autocorr");
  CsvWriter csv(ctx.out / filename, ctx.comment(), cols);
  for (std::size_t r = 0; r < series.rows.size(); ++r) {
    const Eigen::VectorXd& row = series.rows[r];
    std::vector<double> vals{series.times[r], row[0], row[1], row[2],    row[3],
                             row[4],          row[5], row[1] + row[2] + row[3] - 1.0};
    if (autocorr) vals.push_back(row[6]);
    csv.add_row(std::span<const double>(vals.data(), vals.size()));
  }
}

void run_align(Ctx& ctx) {
  RunConfig& cfg = ctx.cfg;
  auto basis = BasisSet::build(cfg.top, cfg.j_max);

  const double t_rev = revival_period(cfg);
  double t_end = cfg.t_end;
  if (t_end < 0.0) {
    if (cfg.top != TopClass::Linear) {
      throw ConfigError("[dynamics] t_end is required for non-linear tops");
    }
    t_end = cfg.t_start + 1.25 * t_rev;
  }
  const double out_dt =
      cfg.output_dt > 0.0 ? cfg.output_dt : (t_end - cfg.t_start) / 2000.0;
  const int n_out =
      1 + static_cast<int>(std::llround((t_end - cfg.t_start) / out_dt));
  const std::vector<double> times = uniform_times(cfg.t_start, t_end, n_out);

  const bool want_autocorr = cfg.autocorr.value_or(!cfg.thermal) && !cfg.thermal &&
                             !cfg.lindblad && cfg.dephasing_gamma == 0.0 &&
                             cfg.reset_gamma == 0.0;

  EnsembleRunner runner(cfg, basis);
  EnsembleSeries series = runner.run(cfg.pulses, times, want_autocorr);
  write_series_csv(ctx, "align.csv", series);

  // feature detection on the configured column
  std::vector<double> signal;
  {
    const auto it = std::find(series.columns.begin(), series.columns.end(),
                              cfg.features_column);
    if (it == series.columns.end()) {
      throw ConfigError("observables 'features_column' names unknown column '" +
                        cfg.features_column + "'");
    }
    const int c = static_cast<int>(it - series.columns.begin());
    signal.reserve(series.rows.size());
    for (const auto& row : series.rows) signal.push_back(row[c]);
  }
  const std::vector<Feature> features =
      detect_features(series.times, signal, cfg.prominence);

  const Eigen::VectorXd& last = series.rows.back();
  double max_residual = 0.0;
  for (const auto& row : series.rows) {
    max_residual =
        std::max(max_residual, std::abs(row[1] + row[2] + row[3] - 1.0));
  }
  AlignmentRecord final_rec;
  final_rec.cos_z = last[0];
  final_rec.cos2_x = last[1];
  final_rec.cos2_y = last[2];
  final_rec.cos2_z = last[3];
  ctx.summary["final"] = {{"t_ps", series.times.back()},
                          {"cos_z", last[0]},
                          {"cos2_x", last[1]},
                          {"cos2_y", last[2]},
                          {"cos2_z", last[3]},
                          {"energy", last[4]},
                          {"j2", last[5]},
                          {"planar", final_rec.planar()},
                          {"oriented", final_rec.oriented()}};
  ctx.summary["max_sumrule_residual"] = max_residual;
  ctx.summary["features_column"] = cfg.features_column;
  ctx.summary["features"] = feature_json(features);
  ctx.summary["revival_period_ps"] = t_rev;
  ctx.add_plot("align.csv", "t_ps", {"cos2_x", "cos2_y", "cos2_z"},
               "alignment factors");
  ctx.add_plot("align.csv", "t_ps", {"cos_z"}, "orientation");

  if (cfg.save_final_state) {
    // single full-basis run to capture the end-of-run state; thermal inputs
    // go through the density path here, so keep j_max moderate
    QuantumState s0 =
        cfg.thermal ? thermal_state(cfg.rotor, basis, cfg.temperature)
                    : QuantumState::pure(basis, basis->index_of(cfg.pure_state));
    PulsedRunSettings st;
    st.t_start = cfg.t_start;
    st.output_times = {t_end};
    st.step_dt = cfg.dt;
    st.prop.watchdog_threshold = cfg.watchdog;
    st.prop.checkpoint_times = {t_end};
    st.interaction.keep_isotropic_shift = cfg.keep_isotropic_shift;
    if (cfg.lindblad || cfg.dephasing_gamma > 0.0 || cfg.reset_gamma > 0.0) {
      st.lindblad = true;
      if (cfg.dephasing_gamma > 0.0) {
        st.dissipators.collapse_ops.push_back(
            make_dephasing_op(*basis, cfg.dephasing_gamma));
      }
      if (cfg.reset_gamma > 0.0) {
        const double t_reset = cfg.reset_temperature >= 0.0
                                   ? cfg.reset_temperature
                                   : cfg.temperature;
        st.dissipators.reset_gamma = cfg.reset_gamma;
        st.dissipators.reset_target =
            thermal_state(cfg.rotor, basis, t_reset).density();
      }
    }
    Trajectory traj =
        propagate_pulsed(s0, cfg.rotor, cfg.pulses, st, Recorder::none());
    save_state((ctx.out / "state.json").string(), traj.checkpoints.at(0).second);
    ctx.summary["state_file"] = "state.json";
  }
}

// ------------------------------------------------------------- spectrum scenario

void run_spectrum(Ctx& ctx) {
  RunConfig& cfg = ctx.cfg;
  auto basis = BasisSet::build(cfg.top, cfg.j_max);
  Operator h0 = free_hamiltonian(cfg.rotor, basis);

  CsvWriter csv(ctx.out / "spectrum.csv", ctx.comment(),
                {"index", "j", "k", "m", "energy_radps"});
  int index = 0;
  if (cfg.top != TopClass::Asymmetric) {
    for (int i = 0; i < basis->dimension(); ++i) {
      const RotorKet& s = basis->state_at(i);
      csv.add_row({static_cast<double>(index++), static_cast<double>(s.j),
                   static_cast<double>(s.k), static_cast<double>(s.m),
                   h0.mat(i, i).real()});
    }
  } else {
    // per (j, m) block levels; the k column carries the level index
    for (int j = 0; j <= cfg.j_max; ++j) {
      for (int m = -j; m <= j; ++m) {
        std::vector<int> idx;
        for (int k = -j; k <= j; ++k) idx.push_back(basis->index_of(j, k, m));
        const int d = static_cast<int>(idx.size());
        Eigen::MatrixXcd block(d, d);
        for (int c = 0; c < d; ++c)
          for (int r = 0; r < d; ++r) block(r, c) = h0.mat(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block,
                                                           Eigen::EigenvaluesOnly);
        for (int level = 0; level < d; ++level) {
          csv.add_row({static_cast<double>(index++), static_cast<double>(j),
                       static_cast<double>(level), static_cast<double>(m),
                       es.eigenvalues()[level]});
        }
      }
    }
  }
  ctx.summary["dimension"] = basis->dimension();
  ctx.summary["top"] = to_string(cfg.top);
  ctx.add_plot("spectrum.csv", "j", {"energy_radps"}, "rotational spectrum");
}

// -------------------------------------------------------------- orient2c scenario

void run_orient2c(Ctx& ctx) {
  RunConfig& cfg = ctx.cfg;
  if (cfg.top != TopClass::Linear) {
    throw ConfigError("orient2c runs on linear rotors");
  }
  auto basis = BasisSet::build(cfg.top, cfg.j_max);

  const TwoColorPulse* base = nullptr;
  for (const auto& p : cfg.pulses) {
    if (const auto* tc = std::get_if<TwoColorPulse>(&p)) {
      base = tc;
      break;
    }
  }
  if (!base) {
    throw ConfigError("orient2c needs a [pulse] section with type = two_color");
  }

  const double t_rev = revival_period(cfg);
  const double support_hi = support(PulseSpec{*base}).second;
  const double t_probe =
      cfg.t_probe > 0.0 ? cfg.t_probe : support_hi + 0.25 * t_rev;
  const double t_end = cfg.t_end > 0.0 ? cfg.t_end : t_probe + 0.5 * t_rev;
  if (t_probe <= support_hi) {
    throw ConfigError("orient2c 't_probe' must lie after the pulse support");
  }

  // post-pulse scan grid, with the probe time injected exactly
  std::vector<double> times = uniform_times(cfg.t_start, t_end, 800);
  times.push_back(t_probe);
  std::sort(times.begin(), times.end());

  const int n_phi = cfg.phi_count;
  std::vector<double> phis(n_phi);
  for (int i = 0; i < n_phi; ++i) phis[i] = kTwoPi * i / (n_phi - 1);

  struct PhiResult {
    double cos_probe, max_abs, t_max;
  };
  std::vector<PhiResult> results(n_phi);

  parallel_for(n_phi, [&](int i) {
    TwoColorPulse tc = *base;
    tc.phi = phis[i];
    std::vector<PulseSpec> pulses = cfg.pulses;
    for (auto& p : pulses) {
      if (std::get_if<TwoColorPulse>(&p)) {
        p = tc;
        break;
      }
    }
    EnsembleRunner local(cfg, basis);
    EnsembleSeries series = local.run(pulses, times, false);
    PhiResult r{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double v = series.rows[k][0];
      if (times[k] == t_probe) r.cos_probe = v;
      if (times[k] >= support_hi && std::abs(v) > std::abs(r.max_abs)) {
        r.max_abs = v;
        r.t_max = times[k];
      }
    }
    results[i] = r;
  });

  CsvWriter csv(ctx.out / "orient2c.csv", ctx.comment(),
                {"phi", "cos_probe", "max_abs_cos", "t_max"});
  for (int i = 0; i < n_phi; ++i) {
    csv.add_row({phis[i], results[i].cos_probe, std::abs(results[i].max_abs),
                 results[i].t_max});
  }

  // cos(phi) structure of the probe-time curve
  const double c1 = results[0].cos_probe;  // phi = 0
  double max_dev = 0.0, at_pi_half = 0.0;
  for (int i = 0; i < n_phi; ++i) {
    max_dev = std::max(max_dev,
                       std::abs(results[i].cos_probe - c1 * std::cos(phis[i])));
    if (std::abs(phis[i] - kPi / 2) < 1e-9) at_pi_half = results[i].cos_probe;
  }
  ctx.summary["t_probe"] = t_probe;
  ctx.summary["cos_at_phi0"] = c1;
  ctx.summary["cos_at_phi_half_pi"] = at_pi_half;
  ctx.summary["max_deviation_from_cos_phi"] = max_dev;
  ctx.summary["relative_deviation"] = c1 != 0.0 ? max_dev / std::abs(c1) : 0.0;
  ctx.add_plot("orient2c.csv", "phi", {"cos_probe"},
               "orientation vs two-color phase");
}

// ----------------------------------------------------------------- echo scenario

void run_echo(Ctx& ctx) {
  RunConfig& cfg = ctx.cfg;
  if (cfg.top != TopClass::Linear) throw ConfigError("echo runs on linear rotors");
  if (!cfg.thermal || cfg.temperature <= 0.0) {
    throw ConfigError("echo needs a thermal initial state with T > 0");
  }
  auto basis = BasisSet::build(cfg.top, cfg.j_max);

  const double t_rev = revival_period(cfg);
  const double tau =
      cfg.echo_tau > 0.0 ? cfg.echo_tau : cfg.echo_tau_frac * t_rev;
  const double strength = cfg.echo_strength;

  // grid commensurate with tau so the shifted-control column is exact
  const int per_tau = 128;
  const int n_tau = 3;
  std::vector<double> times(per_tau * n_tau + 1);
  for (std::size_t i = 0; i < times.size(); ++i) {
    times[i] = tau * static_cast<double>(i) / per_tau;
  }

  auto kick_at = [&](double t, double p) {
    KickTrain k;
    k.t_first = t;
    k.count = 1;
    k.strength = p;
    return PulseSpec{k};
  };

  EnsembleRunner pair_runner(cfg, basis);
  EnsembleSeries pair = pair_runner.run(
      {kick_at(0.0, strength), kick_at(tau, strength)}, times, false);
  EnsembleRunner ctrl_runner(cfg, basis);
  EnsembleSeries ctrl = ctrl_runner.run({kick_at(0.0, strength)}, times, false);

  // echo_diff = pair - [ctrl + shifted ctrl - 1/3]; the linear superposition
  // of two independent single-kick responses
  std::vector<double> diff(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double shifted =
        (i >= static_cast<std::size_t>(per_tau)) ? ctrl.rows[i - per_tau][3]
                                                 : 1.0 / 3.0;
    diff[i] = pair.rows[i][3] - ctrl.rows[i][3] - (shifted - 1.0 / 3.0);
  }

  CsvWriter csv(ctx.out / "echo.csv", ctx.comment(),
                {"t_ps", "cos2_pair", "cos2_single", "echo_diff"});
  for (std::size_t i = 0; i < times.size(); ++i) {
    csv.add_row({times[i], pair.rows[i][3], ctrl.rows[i][3], diff[i]});
  }

  // window diagnostics
  const double w_lo = 1.8 * tau, w_hi = 2.2 * tau;
  double pair_lo = 1e300, pair_hi = -1e300, ctrl_lo = 1e300, ctrl_hi = -1e300;
  std::vector<double> w_times, w_signal;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < w_lo - 1e-12 || times[i] > w_hi + 1e-12) continue;
    pair_lo = std::min(pair_lo, pair.rows[i][3]);
    pair_hi = std::max(pair_hi, pair.rows[i][3]);
    ctrl_lo = std::min(ctrl_lo, ctrl.rows[i][3]);
    ctrl_hi = std::max(ctrl_hi, ctrl.rows[i][3]);
  }
  // features of the two-kick signal restricted to the window
  std::vector<double> sig;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= w_lo - 1e-12 && times[i] <= w_hi + 1e-12) {
      w_times.push_back(times[i]);
      sig.push_back(pair.rows[i][3]);
    }
  }
  const std::vector<Feature> window_features =
      detect_features(w_times, sig, cfg.prominence);

  const double pp_pair = pair_hi - pair_lo;
  const double pp_ctrl = ctrl_hi - ctrl_lo;
  ctx.summary["tau_ps"] = tau;
  ctx.summary["kick_strength"] = strength;
  ctx.summary["window"] = {{"lo", w_lo}, {"hi", w_hi}};
  ctx.summary["pp_pair_in_window"] = pp_pair;
  ctx.summary["pp_control_in_window"] = pp_ctrl;
  ctx.summary["amplitude_ratio"] = pp_ctrl > 0.0 ? pp_pair / pp_ctrl : 0.0;
  ctx.summary["window_features"] = feature_json(window_features);
  ctx.add_plot("echo.csv", "t_ps", {"cos2_pair", "cos2_single"}, "echo response");
  ctx.add_plot("echo.csv", "t_ps", {"echo_diff"}, "nonlinear echo signal");
}

// ---------------------------------------------------------------- kicked scenario

void run_kicked(Ctx& ctx) {
  RunConfig& cfg = ctx.cfg;
  if (cfg.top != TopClass::Linear) throw ConfigError("kicked runs on linear rotors");
  auto basis = BasisSet::build(cfg.top, cfg.j_max);

  const double t_rev = revival_period(cfg);
  // at quantum resonance <J^2> grows without bound, so that train is kept
  // short; the detuned train runs long to expose the localization plateau
  const int count = cfg.kick_count;
  const int res_count = std::min(cfg.resonant_count, count);

  auto train_for = [&](double period_factor, int n) {
    KickTrain k;
    k.t_first = 0.0;
    k.period = period_factor * t_rev;
    k.count = n;
    k.strength = cfg.kick_strength_param;
    return std::vector<PulseSpec>{PulseSpec{k}};
  };
  // observables right after each kick
  auto times_for = [&](double period_factor, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = i * period_factor * t_rev;
    return t;
  };

  EnsembleRunner res_runner(cfg, basis);
  EnsembleSeries resonant =
      res_runner.run(train_for(1.0, res_count), times_for(1.0, res_count), false);
  EnsembleRunner det_runner(cfg, basis);
  EnsembleSeries detuned = det_runner.run(train_for(cfg.detune_factor, count),
                                          times_for(cfg.detune_factor, count),
                                          false);

  CsvWriter csv(ctx.out / "kicked.csv", ctx.comment(),
                {"kick", "j2_resonant", "j2_detuned"});
  for (int i = 0; i < count; ++i) {
    const double res_val = i < res_count
                               ? resonant.rows[i][5]
                               : std::numeric_limits<double>::quiet_NaN();
    csv.add_row({static_cast<double>(i + 1), res_val, detuned.rows[i][5]});
  }

  const int probe = std::min(20, res_count);
  const double j2_res = resonant.rows[probe - 1][5];
  const double j2_det = detuned.rows[std::min(probe, count) - 1][5];
  double det_min = 1e300, det_max = -1e300;
  for (int i = probe - 1; i < count; ++i) {
    det_min = std::min(det_min, detuned.rows[i][5]);
    det_max = std::max(det_max, detuned.rows[i][5]);
  }
  ctx.summary["period_resonant_ps"] = t_rev;
  ctx.summary["detune_factor"] = cfg.detune_factor;
  ctx.summary["kick_strength"] = cfg.kick_strength_param;
  ctx.summary["j2_resonant_at_probe"] = j2_res;
  ctx.summary["j2_detuned_at_probe"] = j2_det;
  ctx.summary["resonant_detuned_ratio"] = j2_det > 0.0 ? j2_res / j2_det : 0.0;
  ctx.summary["detuned_max_over_min"] = det_min > 0.0 ? det_max / det_min : 0.0;
  ctx.summary["probe_kick"] = probe;
  ctx.add_plot("kicked.csv", "kick", {"j2_resonant", "j2_detuned"},
               "rotational energy growth vs kick number");
}

// -------------------------------------------------------------- emdiagram scenario

void run_emdiagram(Ctx& ctx) {
  RunConfig& cfg = ctx.cfg;
  const ClassicalConfig& cl = cfg.classical;
  classical::InertiaSpec inertia{cl.ix, cl.iy, cl.iz};
  inertia.validate();

  std::vector<double> jgrid(cl.j_count);
  for (int i = 0; i < cl.j_count; ++i) {
    jgrid[i] = cl.j_min + (cl.j_max - cl.j_min) * i / (cl.j_count - 1);
  }
  const auto rows = classical::em_diagram(inertia, jgrid);
  CsvWriter csv(ctx.out / "emdiagram.csv", ctx.comment(),
                {"J", "E_min", "E_sep", "E_max"});
  for (const auto& r : rows) csv.add_row({r.j, r.e_min, r.e_sep, r.e_max});
  ctx.add_plot("emdiagram.csv", "J", {"E_min", "E_sep", "E_max"},
               "energy-momentum diagram");

  if (cl.overlay) {
    // quantum levels of the matching rigid rotor at J = j + 1/2
    RotorSpec rs;
    rs.A = 0.5 / inertia.ix;
    rs.B = 0.5 / inertia.iy;
    rs.C = 0.5 / inertia.iz;
    auto basis = BasisSet::build(TopClass::Asymmetric, cl.overlay_j_max);
    Operator h0 = free_hamiltonian(rs, basis);
    CsvWriter levels(ctx.out / "emdiagram_levels.csv", ctx.comment(),
                     {"j", "J", "level", "energy"});
    for (int j = 0; j <= cl.overlay_j_max; ++j) {
      std::vector<int> idx;
      for (int k = -j; k <= j; ++k) idx.push_back(basis->index_of(j, k, 0));
      const int d = static_cast<int>(idx.size());
      Eigen::MatrixXcd block(d, d);
      for (int c = 0; c < d; ++c)
        for (int r = 0; r < d; ++r) block(r, c) = h0.mat(idx[r], idx[c]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block,
                                                         Eigen::EigenvaluesOnly);
      for (int level = 0; level < d; ++level) {
        levels.add_row({static_cast<double>(j), j + 0.5,
                        static_cast<double>(level), es.eigenvalues()[level]});
      }
    }
    ctx.summary["overlay_jmax"] = cl.overlay_j_max;
    ctx.add_plot("emdiagram_levels.csv", "J", {"energy"}, "quantum levels");
  }

  if (cl.trajectory) {
    classical::ClassicalState s0;
    s0.j_body = Eigen::Vector3d(cl.j0x, cl.j0y, cl.j0z);
    s0.theta = cl.theta0;
    s0.phi = cl.phi0;
    s0.chi = cl.chi0;
    const auto traj = classical::integrate_euler(inertia, s0, cl.t_span, cl.tol,
                                                 cl.outputs);
    CsvWriter tcsv(ctx.out / "trajectory.csv", ctx.comment(),
                   {"t", "jx", "jy", "jz", "theta", "phi", "chi", "energy",
                    "j_norm_sq"});
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
      const auto& st = traj.states[i];
      tcsv.add_row({traj.t[i], st.j_body.x(), st.j_body.y(), st.j_body.z(),
                    st.theta, st.phi, st.chi, traj.energy[i],
                    traj.j_norm_sq[i]});
    }
    const auto flips = classical::tennis_racket_flips(traj);
    json flips_json = json::array();
    for (double f : flips) flips_json.push_back(f);
    ctx.summary["flips"] = flips_json;
    const double e = traj.energy.front();
    const double j = std::sqrt(traj.j_norm_sq.front());
    const classical::MotionClass mc = classical::classify(inertia, e, j);
    const char* names[] = {"rotating", "oscillating", "separatrix", "forbidden"};
    ctx.summary["motion_class"] = names[static_cast<int>(mc)];
    if (mc == classical::MotionClass::Rotating ||
        mc == classical::MotionClass::Oscillating) {
      ctx.summary["orbit_period"] = classical::free_rotation_period(inertia, e, j);
    }
    ctx.add_plot("trajectory.csv", "t", {"jx", "jy", "jz"},
                 "body-frame angular momentum");
  }
}

// --------------------------------------------------------------- optimize scenario

void run_optimize(Ctx& ctx) {
  RunConfig& cfg = ctx.cfg;
  const ControlConfig& cc = cfg.control;
  auto basis = BasisSet::build(cfg.top, cfg.j_max);
  // the shipped problems drive along Z only; a pure initial state then stays
  // in its m-block and the problem shrinks accordingly
  if (!cfg.thermal) basis = basis->m_restricted(cfg.pure_state.m);

  ControlProblem problem;
  problem.spec = cfg.rotor;
  problem.basis = basis;
  problem.initial = cfg.thermal
                        ? thermal_state(cfg.rotor, basis, cfg.temperature)
                        : QuantumState::pure(basis, basis->index_of(cfg.pure_state));
  problem.energy_penalty = cc.lambda;
  problem.grid_dt = cfg.dt;
  problem.prop.watchdog_threshold = cfg.watchdog;

  const double t_rev = revival_period(cfg);
  std::string objective = cc.objective;

  if (cc.problem == "kick1") {
    if (objective.empty()) objective = "alignment";
    problem.params = {{"P", cc.p_lo, cc.p_hi}};
    problem.pulse_factory = [](const Eigen::VectorXd& x) {
      KickTrain k;
      k.count = 1;
      k.strength = x[0];
      return std::vector<PulseSpec>{PulseSpec{k}};
    };
    problem.t_probe = cc.t_probe > 0.0 ? cc.t_probe : 0.3 * t_rev;
  } else if (cc.problem == "kick_pair") {
    if (objective.empty()) objective = "alignment";
    problem.params = {{"P", cc.p_lo, cc.p_hi}, {"tau", cc.tau_lo, cc.tau_hi}};
    problem.pulse_factory = [](const Eigen::VectorXd& x) {
      KickTrain a, b;
      a.count = 1;
      a.strength = x[0];
      b.count = 1;
      b.strength = x[0];
      b.t_first = x[1];
      return std::vector<PulseSpec>{PulseSpec{a}, PulseSpec{b}};
    };
    problem.t_probe = cc.t_probe > 0.0 ? cc.t_probe : cc.tau_hi + 0.3 * t_rev;
  } else {  // two_color_phase
    if (objective.empty()) objective = "orientation";
    const TwoColorPulse* base = nullptr;
    for (const auto& p : cfg.pulses) {
      if (const auto* tc = std::get_if<TwoColorPulse>(&p)) {
        base = tc;
        break;
      }
    }
    if (!base) {
      throw ConfigError(
          "control problem two_color_phase needs a [pulse] type = two_color");
    }
    const TwoColorPulse tmpl = *base;
    problem.params = {{"phi", cc.phi_lo, cc.phi_hi}, {"e2", cc.e2_lo, cc.e2_hi}};
    problem.pulse_factory = [tmpl](const Eigen::VectorXd& x) {
      TwoColorPulse tc = tmpl;
      tc.phi = x[0];
      tc.e2 = x[1];
      return std::vector<PulseSpec>{PulseSpec{tc}};
    };
    problem.t_probe = cc.t_probe > 0.0
                          ? cc.t_probe
                          : support(PulseSpec{tmpl}).second + 0.25 * t_rev;
  }

  if (objective == "alignment") {
    problem.objective_op = cos_product(basis, SpaceAxis::Z, SpaceAxis::Z);
    problem.maximize_abs = false;
  } else {
    problem.objective_op = direction_cosine(basis, SpaceAxis::Z);
    problem.maximize_abs = true;
  }
  problem.kind = ObjectiveKind::ExpectationAtTime;

  const OptimizeMethod method = cc.method == "simplex"
                                    ? OptimizeMethod::NelderMead
                                    : OptimizeMethod::DifferentialEvolution;
  const OptimizeResult result = optimize(problem, method, cc.budget, cfg.seed);

  std::vector<std::string> cols{"eval"};
  for (const auto& p : problem.params) cols.push_back(p.name);
  cols.push_back("value");
  cols.push_back("best_so_far");
  CsvWriter csv(ctx.out / "history.csv", ctx.comment(), cols);
  for (const auto& h : result.history) {
    std::vector<double> row{static_cast<double>(h.eval_index)};
    for (int i = 0; i < h.params.size(); ++i) row.push_back(h.params[i]);
    row.push_back(h.value);
    row.push_back(h.best_so_far);
    csv.add_row(std::span<const double>(row.data(), row.size()));
  }

  json best_params = json::object();
  for (std::size_t i = 0; i < problem.params.size(); ++i) {
    best_params[problem.params[i].name] = result.best_params[i];
  }
  ctx.summary["problem"] = cc.problem;
  ctx.summary["method"] = cc.method;
  ctx.summary["objective"] = objective;
  ctx.summary["t_probe"] = problem.t_probe;
  ctx.summary["best_value"] = result.best_value;
  ctx.summary["best_params"] = best_params;
  ctx.summary["evaluations"] = result.history.size();
  ctx.summary["budget_exhausted"] = result.budget_exhausted;
  ctx.add_plot("history.csv", "eval", {"best_so_far"}, "optimization progress");
}

}  // namespace

int scenario_thread_count() { return thread_count_impl(); }

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{
      "spectrum", "align", "orient2c", "echo", "kicked", "emdiagram", "optimize"};
  return names;
}

void run_scenario(const std::string& name, RunConfig cfg,
                  const ScenarioOverrides& overrides) {
  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.j_max) {
    if (*overrides.j_max < 0) throw ConfigError("jmax override must be >= 0");
    cfg.j_max = *overrides.j_max;
  }

  Ctx ctx{std::move(cfg), name, {}, json::object(), json::array()};
  ctx.out = std::filesystem::path(ctx.cfg.out_dir);
  std::filesystem::create_directories(ctx.out);

  if (name == "spectrum") {
    run_spectrum(ctx);
  } else if (name == "align") {
    run_align(ctx);
  } else if (name == "orient2c") {
    run_orient2c(ctx);
  } else if (name == "echo") {
    run_echo(ctx);
  } else if (name == "kicked") {
    run_kicked(ctx);
  } else if (name == "emdiagram") {
    run_emdiagram(ctx);
  } else if (name == "optimize") {
    run_optimize(ctx);
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  ctx.finish();
}

}  // namespace rotorsim
