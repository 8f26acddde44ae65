#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rotorsim/basis.hpp"
#include "rotorsim/pulses.hpp"
#include "rotorsim/rotor_spec.hpp"

namespace rotorsim {

// Rejected configuration input; message always names the offending key or
// section and the line it came from.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ControlConfig {
  std::string problem = "kick1";    // kick1 | two_color_phase | kick_pair
  std::string method = "simplex";   // simplex | de
  std::string objective;            // alignment | orientation (default per problem)
  int budget = 120;
  double lambda = 0.0;
  double t_probe = -1.0;  // < 0: derived from the pulse timing
  double p_lo = 0.0, p_hi = 2.0;
  double phi_lo = 0.0, phi_hi = 2.0 * 3.14159265358979323846;
  double e2_lo = 0.0, e2_hi = 1.0;
  double tau_lo = 0.05, tau_hi = 1.5;
};

struct ClassicalConfig {
  double ix = 2.0, iy = 1.5, iz = 1.0;
  double j_min = 0.0, j_max = 10.0;
  int j_count = 101;
  bool overlay = true;
  int overlay_j_max = 8;
  bool trajectory = false;
  double j0x = 0.02, j0y = 1.0, j0z = 0.02;
  double theta0 = 1.5707963267948966, phi0 = 0.0, chi0 = 0.0;
  double t_span = 100.0;
  double tol = 1e-11;
  int outputs = 4000;
};

struct RunConfig {
  // [rotor]
  RotorSpec rotor;          // constants already converted to rad/ps
  TopClass top = TopClass::Linear;

  // [basis]
  int j_max = 10;

  // [initial]
  bool thermal = false;
  double temperature = 0.0;  // kelvin
  RotorKet pure_state{0, 0, 0};

  // [dynamics]
  double t_start = 0.0;
  double t_end = -1.0;     // < 0: scenario default
  double dt = 1e-3;
  double output_dt = -1.0; // < 0: scenario default
  bool lindblad = false;
  double dephasing_gamma = 0.0;
  double reset_gamma = 0.0;
  double reset_temperature = -1.0;  // < 0: reuse [initial] T
  double watchdog = 1e-6;
  bool keep_isotropic_shift = true;

  // [observables]
  std::optional<bool> autocorr;     // default: on for pure initial states
  std::string features_column = "cos2_z";
  double prominence = 0.05;
  bool save_final_state = false;

  // [pulse] (repeated)
  std::vector<PulseSpec> pulses;

  // [scenario]
  std::uint64_t seed = 0;
  int phi_count = 25;
  double t_probe = -1.0;
  double echo_strength = 0.5;
  double echo_tau = -1.0;       // explicit tau wins over tau_frac
  double echo_tau_frac = 0.12;  // fraction of the revival period
  double kick_strength_param = 1.0;
  int kick_count = 100;      // detuned train length
  int resonant_count = 20;   // resonant train length (ballistic growth)
  double detune_factor = 1.1847;

  ControlConfig control;
  ClassicalConfig classical;

  // [output]
  std::string out_dir = "out";

  std::string config_hash;  // FNV-1a of the raw file bytes
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

}  // namespace rotorsim
