#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <utility>
#include <variant>

#include "rotorsim/basis.hpp"
#include "rotorsim/rotor_spec.hpp"

namespace rotorsim {

// Carrier handling: Averaged pulses describe the slow envelope of an
// off-resonant optical field (interaction via the cycle-averaged
// polarizability form); Resonant pulses give the instantaneous field
// itself (THz / dc-like driving, no averaging).
enum class CarrierMode { Averaged, Resonant };

struct GaussianPulse {
  double t0 = 0.0;    // center, ps
  double fwhm = 0.1;  // intensity-profile FWHM of the envelope, ps
  std::array<double, 3> peak{};   // per space axis
  std::array<double, 3> phase{};  // polarization phases (averaged mode)
  CarrierMode mode = CarrierMode::Averaged;
};

// Train of instantaneous alignment kicks exp(i P cos^2(theta)).
struct KickTrain {
  double t_first = 0.0;
  double period = 0.0;  // ignored when count == 1
  int count = 1;
  double strength = 0.0;  // dimensionless P per kick
};

// Two-color pair along Z sharing one Gaussian envelope.
struct TwoColorPulse {
  double t0 = 0.0;
  double fwhm = 0.1;
  double e1 = 0.0;
  double e2 = 0.0;
  double phi = 0.0;  // relative phase of the second harmonic
};

// Single THz lobe E_Z(t) = amplitude * sin^2(pi (t-t0)/duration); with
// zero_area set, an opposite-sign tail of triple duration and one third
// amplitude follows, making the time integral vanish identically.
struct HalfCyclePulse {
  double t0 = 0.0;
  double amplitude = 0.0;  // rad/ps coupling scale
  double duration = 1.0;   // ps (main lobe)
  bool zero_area = false;
};

// Trapezoid envelope along Z, averaged mode.
struct RampPulse {
  double t_on = 0.0;
  double rise = 1.0;
  double hold = 1.0;
  double fall = 1.0;
  double strength = 0.0;
};

using PulseSpec =
    std::variant<GaussianPulse, KickTrain, TwoColorPulse, HalfCyclePulse, RampPulse>;

// Throws std::invalid_argument on non-finite strengths or non-positive
// durations.
void validate(const PulseSpec& pulse);

struct FieldSample {
  CarrierMode mode = CarrierMode::Averaged;
  std::array<double, 3> amplitude{};  // envelope (averaged) / field (resonant)
  std::array<double, 3> phase{};
  bool two_color = false;
  double e1 = 0.0, e2 = 0.0, phi = 0.0;
};

// Deterministic, smooth within the variant's support, exactly zero outside.
// Kick trains sample to zero (they are handled as instantaneous events).
FieldSample sample(const PulseSpec& pulse, double t);

// [t_lo, t_hi] outside which sample() vanishes. Gaussian envelopes are
// truncated at +-5 fwhm where the tail is < 1e-15 of the peak.
std::pair<double, double> support(const PulseSpec& pulse);

// Time integral of the Z-axis field (resonant variants); checks the
// zero-area construction.
double field_area(const PulseSpec& pulse);

// Closed-form integral of sum_K amplitude_K(t)^2 dt.
double envelope_sq_integral(const PulseSpec& pulse);

// Integrated alignment kick P = (dalpha/4) * integral of E_Z^2 dt in the
// sudden limit. For a KickTrain this is count * strength directly.
double kick_strength(const PulseSpec& pulse, const RotorSpec& spec);

// True when the pulse is short against the rotational period 2*pi/(2B) so
// the sudden approximation is sensible; callers may warn when false.
bool sudden_limit_ok(const PulseSpec& pulse, const RotorSpec& spec);

// Energy measure used for control penalties: envelope-squared integral,
// with kick trains scored as sum 4 P_i / dalpha (their equivalent
// integral).
double pulse_energy(const PulseSpec& pulse, const RotorSpec& spec);

struct Unitary {
  std::shared_ptr<const BasisSet> basis;
  Eigen::MatrixXcd mat;
};

// exp(i P cos^2(theta_zZ)) by eigendecomposition of the cos^2 operator.
Unitary sudden_propagator(std::shared_ptr<const BasisSet> basis, double P);

// exp(i Q cos(theta_zZ)), the THz analogue.
Unitary sudden_orientation_propagator(std::shared_ptr<const BasisSet> basis,
                                      double Q);

}  // namespace rotorsim
