#include "rotorsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rotorsim/constants.hpp"
#include "rotorsim/csv.hpp"

namespace rotorsim {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Entry {
  std::string value;
  int line;
  bool used = false;
};

// one parsed section instance, in file order
struct Section {
  std::string name;
  int line;
  std::map<std::string, Entry> entries;
};

class Cursor {
 public:
  Cursor(Section* s) : s_(s) {}

  bool present() const { return s_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) {
    if (!s_) return std::nullopt;
    auto it = s_->entries.find(key);
    if (it == s_->entries.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  int line_of(const std::string& key) const {
    auto it = s_->entries.find(key);
    return it == s_->entries.end() ? s_->line : it->second.line;
  }

  double number(const std::string& key, double fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    return parse_number(key, *v);
  }

  double required_number(const std::string& key) {
    auto v = raw(key);
    if (!v) {
      throw ConfigError("[" + s_->name + "] missing required key '" + key +
                        "' (section at line " + std::to_string(s_->line) + ")");
    }
    return parse_number(key, *v);
  }

  int integer(const std::string& key, int fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    const double d = parse_number(key, *v);
    const int i = static_cast<int>(std::llround(d));
    if (std::abs(d - i) > 1e-12) {
      throw ConfigError("key '" + key + "' at line " +
                        std::to_string(line_of(key)) + ": expected an integer");
    }
    return i;
  }

  bool boolean(const std::string& key, bool fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ConfigError("key '" + key + "' at line " +
                      std::to_string(line_of(key)) +
                      ": expected true/false, got '" + *v + "'");
  }

  std::string word(const std::string& key, const std::string& fallback) {
    auto v = raw(key);
    return v ? *v : fallback;
  }

  void reject_unused() const {
    if (!s_) return;
    for (const auto& [key, entry] : s_->entries) {
      if (!entry.used) {
        throw ConfigError("unknown key '" + key + "' in section [" + s_->name +
                          "] at line " + std::to_string(entry.line));
      }
    }
  }

 private:
  double parse_number(const std::string& key, const std::string& text) const {
    const std::string t = trim(text);
    double out = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
      throw ConfigError("key '" + key + "' at line " +
                        std::to_string(line_of(key)) +
                        ": cannot parse number from '" + t + "'");
    }
    if (!std::isfinite(out)) {
      throw ConfigError("key '" + key + "' at line " +
                        std::to_string(line_of(key)) + ": non-finite value");
    }
    return out;
  }

  Section* s_;
};

const std::set<std::string> kKnownSections{
    "rotor", "basis", "initial", "dynamics", "observables",
    "pulse", "scenario", "control", "classical", "output"};

std::vector<Section> tokenize(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream stream(text);
  std::string raw_line;
  int line_no = 0;
  Section* current = nullptr;
  while (std::getline(stream, raw_line)) {
    ++line_no;
    const std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("malformed section header at line " +
                          std::to_string(line_no) + ": '" + line + "'");
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!kKnownSections.count(name)) {
        throw ConfigError("unknown section [" + name + "] at line " +
                          std::to_string(line_no));
      }
      if (name != "pulse") {
        for (const auto& s : sections) {
          if (s.name == name) {
            throw ConfigError("duplicate section [" + name + "] at line " +
                              std::to_string(line_no));
          }
        }
      }
      sections.push_back({name, line_no, {}});
      current = &sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at line " +
                        std::to_string(line_no) + ": '" + line + "'");
    }
    if (!current) {
      throw ConfigError("entry outside any section at line " +
                        std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("empty key or value at line " + std::to_string(line_no));
    }
    if (current->entries.count(key)) {
      throw ConfigError("duplicate key '" + key + "' in section [" +
                        current->name + "] at line " + std::to_string(line_no));
    }
    current->entries[key] = {value, line_no, false};
  }
  return sections;
}

PulseSpec parse_pulse(Cursor cur, int section_line) {
  const std::string type = cur.word("type", "");
  if (type.empty()) {
    throw ConfigError("[pulse] section at line " + std::to_string(section_line) +
                      " needs a 'type' key");
  }
  PulseSpec out;
  if (type == "gaussian") {
    GaussianPulse g;
    g.t0 = cur.number("t0", 0.0);
    g.fwhm = cur.required_number("fwhm");
    g.peak = {cur.number("ex", 0.0), cur.number("ey", 0.0), cur.number("ez", 0.0)};
    g.phase = {cur.number("phase_x", 0.0), cur.number("phase_y", 0.0),
               cur.number("phase_z", 0.0)};
    const std::string mode = cur.word("mode", "averaged");
    if (mode == "averaged") {
      g.mode = CarrierMode::Averaged;
    } else if (mode == "resonant") {
      g.mode = CarrierMode::Resonant;
    } else {
      throw ConfigError("pulse 'mode' must be averaged or resonant, got '" +
                        mode + "'");
    }
    out = g;
  } else if (type == "kick_train") {
    KickTrain k;
    k.t_first = cur.number("t_first", 0.0);
    k.period = cur.number("period", 0.0);
    k.count = cur.integer("count", 1);
    k.strength = cur.required_number("strength");
    out = k;
  } else if (type == "two_color") {
    TwoColorPulse tc;
    tc.t0 = cur.number("t0", 0.0);
    tc.fwhm = cur.required_number("fwhm");
    tc.e1 = cur.required_number("e1");
    tc.e2 = cur.required_number("e2");
    tc.phi = cur.number("phi", 0.0);
    out = tc;
  } else if (type == "half_cycle") {
    HalfCyclePulse h;
    h.t0 = cur.number("t0", 0.0);
    h.amplitude = cur.required_number("amplitude");
    h.duration = cur.required_number("duration");
    h.zero_area = cur.boolean("zero_area", false);
    out = h;
  } else if (type == "ramp") {
    RampPulse r;
    r.t_on = cur.number("t_on", 0.0);
    r.rise = cur.required_number("rise");
    r.hold = cur.number("hold", 0.0);
    r.fall = cur.required_number("fall");
    r.strength = cur.required_number("strength");
    out = r;
  } else {
    throw ConfigError("unknown pulse type '" + type + "' at line " +
                      std::to_string(section_line));
  }
  cur.reject_unused();
  try {
    validate(out);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[pulse] at line " + std::to_string(section_line) + ": " +
                      e.what());
  }
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  cfg.config_hash = fnv1a_hex(text);

  std::vector<Section> sections = tokenize(text);
  auto find = [&](const std::string& name) -> Section* {
    for (auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };

  // [rotor]
  {
    Cursor cur(find("rotor"));
    const std::string unit = cur.word("unit", "radps");
    double scale = 1.0;
    if (unit == "radps") {
      scale = 1.0;
    } else if (unit == "cm-1") {
      scale = kCmInvToRadPerPs;
    } else if (unit == "ghz") {
      scale = kGHzToRadPerPs;
    } else {
      throw ConfigError("rotor 'unit' must be radps, cm-1 or ghz, got '" +
                        unit + "'");
    }
    cfg.rotor.A = scale * cur.number("A", 0.0);
    cfg.rotor.B = scale * cur.number("B", 1.0);
    cfg.rotor.C = scale * cur.number("C", 0.0);
    if (auto d = cur.raw("D")) {
      cfg.rotor.centrifugal_D = scale * cur.number("D", 0.0);
      (void)d;
    }
    cfg.rotor.mu0 = cur.number("mu0", 0.0);
    cfg.rotor.alpha_par = cur.number("alpha_par", 0.0);
    cfg.rotor.alpha_perp = cur.number("alpha_perp", 0.0);
    cfg.rotor.beta_par = cur.number("beta_par", 0.0);
    cfg.rotor.beta_perp = cur.number("beta_perp", 0.0);
    cfg.rotor.spin_weights = {cur.number("spin_weight_even", 1.0),
                              cur.number("spin_weight_odd", 1.0)};
    const std::string klass = cur.word("class", "linear");
    if (klass == "auto") {
      cfg.top = classify_top(cfg.rotor.A, cfg.rotor.B, cfg.rotor.C, 1e-9);
      const double da = cfg.rotor.delta_alpha();
      const bool prolate_like = cfg.top == TopClass::Linear ||
                                cfg.top == TopClass::ProlateSymmetric;
      if (da != 0.0 &&
          ((prolate_like && da < 0.0) ||
           (cfg.top == TopClass::OblateSymmetric && da > 0.0))) {
        throw ConfigError(
            "rotor: polarizability anisotropy sign is inconsistent with the "
            "auto-classified top (" + to_string(cfg.top) + ")");
      }
    } else {
      try {
        cfg.top = top_class_from_string(klass);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("rotor 'class': ") + e.what());
      }
    }
    cur.reject_unused();
  }

  // [basis]
  {
    Cursor cur(find("basis"));
    cfg.j_max = cur.integer("jmax", cfg.j_max);
    if (cfg.j_max < 0) throw ConfigError("basis 'jmax' must be >= 0");
    cur.reject_unused();
  }

  // [initial]
  {
    Cursor cur(find("initial"));
    const std::string type = cur.word("type", "pure");
    if (type == "pure") {
      cfg.thermal = false;
      cfg.pure_state = {cur.integer("j", 0), cur.integer("k", 0),
                        cur.integer("m", 0)};
    } else if (type == "thermal") {
      cfg.thermal = true;
      cfg.temperature = cur.required_number("T");
      if (cfg.temperature < 0.0) {
        throw ConfigError("initial 'T' must be >= 0 kelvin");
      }
    } else {
      throw ConfigError("initial 'type' must be pure or thermal, got '" + type +
                        "'");
    }
    cur.reject_unused();
  }

  // [dynamics]
  {
    Cursor cur(find("dynamics"));
    cfg.t_start = cur.number("t_start", cfg.t_start);
    cfg.t_end = cur.number("t_end", cfg.t_end);
    cfg.dt = cur.number("dt", cfg.dt);
    cfg.output_dt = cur.number("output_dt", cfg.output_dt);
    const std::string method = cur.word("method", "unitary");
    if (method == "lindblad") {
      cfg.lindblad = true;
    } else if (method != "unitary") {
      throw ConfigError("dynamics 'method' must be unitary or lindblad");
    }
    cfg.dephasing_gamma = cur.number("dephasing_gamma", 0.0);
    cfg.reset_gamma = cur.number("reset_gamma", 0.0);
    cfg.reset_temperature = cur.number("reset_T", cfg.reset_temperature);
    cfg.watchdog = cur.number("watchdog", cfg.watchdog);
    cfg.keep_isotropic_shift =
        cur.boolean("keep_isotropic_shift", cfg.keep_isotropic_shift);
    if (cfg.dt <= 0.0) throw ConfigError("dynamics 'dt' must be > 0");
    if (cfg.dephasing_gamma < 0.0 || cfg.reset_gamma < 0.0) {
      throw ConfigError("dynamics relaxation rates must be >= 0");
    }
    cur.reject_unused();
  }

  // [observables]
  {
    Cursor cur(find("observables"));
    if (auto v = cur.raw("autocorr")) {
      cfg.autocorr = (*v == "true" || *v == "1");
      if (!(*v == "true" || *v == "1" || *v == "false" || *v == "0")) {
        throw ConfigError("observables 'autocorr' must be true/false");
      }
    }
    cfg.features_column = cur.word("features_column", cfg.features_column);
    cfg.prominence = cur.number("prominence", cfg.prominence);
    cfg.save_final_state = cur.boolean("save_final_state", cfg.save_final_state);
    if (cfg.prominence <= 0.0 || cfg.prominence >= 1.0) {
      throw ConfigError("observables 'prominence' must lie in (0, 1)");
    }
    cur.reject_unused();
  }

  // [pulse] (repeated, in file order)
  for (auto& s : sections) {
    if (s.name == "pulse") {
      cfg.pulses.push_back(parse_pulse(Cursor(&s), s.line));
    }
  }

  // [scenario]
  {
    Cursor cur(find("scenario"));
    const double seed = cur.number("seed", 0.0);
    if (seed < 0.0) throw ConfigError("scenario 'seed' must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.phi_count = cur.integer("phi_count", cfg.phi_count);
    cfg.t_probe = cur.number("t_probe", cfg.t_probe);
    cfg.echo_strength = cur.number("echo_strength", cfg.echo_strength);
    cfg.echo_tau = cur.number("echo_tau", cfg.echo_tau);
    cfg.echo_tau_frac = cur.number("echo_tau_frac", cfg.echo_tau_frac);
    cfg.kick_strength_param = cur.number("kick_strength", cfg.kick_strength_param);
    cfg.kick_count = cur.integer("kick_count", cfg.kick_count);
    cfg.resonant_count = cur.integer("resonant_count", cfg.resonant_count);
    cfg.detune_factor = cur.number("detune_factor", cfg.detune_factor);
    if (cfg.phi_count < 5) throw ConfigError("scenario 'phi_count' must be >= 5");
    if (cfg.kick_count < 1) throw ConfigError("scenario 'kick_count' must be >= 1");
    if (cfg.resonant_count < 1) {
      throw ConfigError("scenario 'resonant_count' must be >= 1");
    }
    cur.reject_unused();
  }

  // [control]
  {
    Cursor cur(find("control"));
    ControlConfig& cc = cfg.control;
    cc.problem = cur.word("problem", cc.problem);
    cc.method = cur.word("method", cc.method);
    cc.objective = cur.word("objective", cc.objective);
    cc.budget = cur.integer("budget", cc.budget);
    cc.lambda = cur.number("lambda", cc.lambda);
    cc.t_probe = cur.number("t_probe", cc.t_probe);
    cc.p_lo = cur.number("p_lo", cc.p_lo);
    cc.p_hi = cur.number("p_hi", cc.p_hi);
    cc.phi_lo = cur.number("phi_lo", cc.phi_lo);
    cc.phi_hi = cur.number("phi_hi", cc.phi_hi);
    cc.e2_lo = cur.number("e2_lo", cc.e2_lo);
    cc.e2_hi = cur.number("e2_hi", cc.e2_hi);
    cc.tau_lo = cur.number("tau_lo", cc.tau_lo);
    cc.tau_hi = cur.number("tau_hi", cc.tau_hi);
    if (cc.problem != "kick1" && cc.problem != "two_color_phase" &&
        cc.problem != "kick_pair") {
      throw ConfigError("control 'problem' must be kick1, two_color_phase or "
                        "kick_pair");
    }
    if (cc.method != "simplex" && cc.method != "de") {
      throw ConfigError("control 'method' must be simplex or de");
    }
    if (!cc.objective.empty() && cc.objective != "alignment" &&
        cc.objective != "orientation") {
      throw ConfigError("control 'objective' must be alignment or orientation");
    }
    if (cc.budget < 2) throw ConfigError("control 'budget' must be >= 2");
    if (cc.lambda < 0.0) throw ConfigError("control 'lambda' must be >= 0");
    cur.reject_unused();
  }

  // [classical]
  {
    Cursor cur(find("classical"));
    ClassicalConfig& cl = cfg.classical;
    cl.ix = cur.number("ix", cl.ix);
    cl.iy = cur.number("iy", cl.iy);
    cl.iz = cur.number("iz", cl.iz);
    cl.j_min = cur.number("j_min", cl.j_min);
    cl.j_max = cur.number("j_max", cl.j_max);
    cl.j_count = cur.integer("j_count", cl.j_count);
    cl.overlay = cur.boolean("overlay", cl.overlay);
    cl.overlay_j_max = cur.integer("overlay_jmax", cl.overlay_j_max);
    cl.trajectory = cur.boolean("trajectory", cl.trajectory);
    cl.j0x = cur.number("j0x", cl.j0x);
    cl.j0y = cur.number("j0y", cl.j0y);
    cl.j0z = cur.number("j0z", cl.j0z);
    cl.theta0 = cur.number("theta0", cl.theta0);
    cl.phi0 = cur.number("phi0", cl.phi0);
    cl.chi0 = cur.number("chi0", cl.chi0);
    cl.t_span = cur.number("t_span", cl.t_span);
    cl.tol = cur.number("tol", cl.tol);
    cl.outputs = cur.integer("outputs", cl.outputs);
    if (cl.j_count < 2) throw ConfigError("classical 'j_count' must be >= 2");
    if (cl.j_min < 0.0 || cl.j_max <= cl.j_min) {
      throw ConfigError("classical J grid requires 0 <= j_min < j_max");
    }
    cur.reject_unused();
  }

  // [output]
  {
    Cursor cur(find("output"));
    cfg.out_dir = cur.word("dir", cfg.out_dir);
    cur.reject_unused();
  }

  // cross-field validation
  try {
    cfg.rotor.validate(cfg.top);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("rotor: ") + e.what());
  }
  if (!cfg.thermal) {
    const RotorKet s = cfg.pure_state;
    if (s.j < 0 || s.j > cfg.j_max || std::abs(s.m) > s.j ||
        std::abs(s.k) > s.j || (cfg.top == TopClass::Linear && s.k != 0)) {
      throw ConfigError("initial pure state (j=" + std::to_string(s.j) +
                        ", k=" + std::to_string(s.k) + ", m=" +
                        std::to_string(s.m) + ") is not in the basis");
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace rotorsim
