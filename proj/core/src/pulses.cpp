#include "rotorsim/pulses.hpp"

#include <cmath>
#include <stdexcept>

#include "rotorsim/constants.hpp"
#include "rotorsim/operators.hpp"

namespace rotorsim {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kFourLn2 = 4.0 * kLn2;
constexpr double kGaussSupportFwhm = 5.0;
constexpr double kTailRatio = 3.0;  // zero-area tail duration / main lobe

double gauss(double t, double t0, double fwhm) {
  const double x = (t - t0) / fwhm;
  return std::exp(-kFourLn2 * x * x);
}

// full-line integral of [exp(-4 ln2 (t/w)^2)]^2 dt; the +-5 fwhm truncation
// changes this by less than 1e-30 relative
double gauss_sq_integral(double fwhm) {
  return fwhm * std::sqrt(kPi / (8.0 * kLn2));
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("pulse: non-finite ") + what);
  }
}

void require_positive(double v, const char* what) {
  require_finite(v, what);
  if (v <= 0.0) {
    throw std::invalid_argument(std::string("pulse: non-positive ") + what);
  }
}

double ramp_value(const RampPulse& p, double t) {
  const double s = t - p.t_on;
  if (s < 0.0) return 0.0;
  if (s < p.rise) return p.strength * s / p.rise;
  if (s < p.rise + p.hold) return p.strength;
  const double f = s - p.rise - p.hold;
  if (f < p.fall) return p.strength * (1.0 - f / p.fall);
  return 0.0;
}

double half_cycle_value(const HalfCyclePulse& p, double t) {
  const double s = t - p.t0;
  if (s >= 0.0 && s < p.duration) {
    const double u = std::sin(kPi * s / p.duration);
    return p.amplitude * u * u;
  }
  if (p.zero_area && s >= p.duration && s < (1.0 + kTailRatio) * p.duration) {
    const double u = std::sin(kPi * (s - p.duration) / (kTailRatio * p.duration));
    return -(p.amplitude / kTailRatio) * u * u;
  }
  return 0.0;
}

}  // namespace

void validate(const PulseSpec& pulse) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPulse>) {
          require_positive(p.fwhm, "fwhm");
          require_finite(p.t0, "t0");
          for (double v : p.peak) require_finite(v, "peak strength");
          for (double v : p.phase) require_finite(v, "phase");
        } else if constexpr (std::is_same_v<T, KickTrain>) {
          require_finite(p.t_first, "t_first");
          require_finite(p.strength, "kick strength");
          if (p.count < 1) throw std::invalid_argument("pulse: kick count < 1");
          if (p.count > 1) require_positive(p.period, "period");
        } else if constexpr (std::is_same_v<T, TwoColorPulse>) {
          require_positive(p.fwhm, "fwhm");
          require_finite(p.t0, "t0");
          require_finite(p.phi, "phi");
          if (!(p.e1 >= 0.0) || !(p.e2 >= 0.0) || !std::isfinite(p.e1) ||
              !std::isfinite(p.e2)) {
            throw std::invalid_argument("pulse: two-color envelopes must be >= 0");
          }
        } else if constexpr (std::is_same_v<T, HalfCyclePulse>) {
          require_positive(p.duration, "duration");
          require_finite(p.amplitude, "amplitude");
          require_finite(p.t0, "t0");
        } else if constexpr (std::is_same_v<T, RampPulse>) {
          require_positive(p.rise, "rise");
          require_positive(p.fall, "fall");
          if (p.hold < 0.0 || !std::isfinite(p.hold)) {
            throw std::invalid_argument("pulse: negative hold");
          }
          require_finite(p.strength, "strength");
          require_finite(p.t_on, "t_on");
        }
      },
      pulse);
}

FieldSample sample(const PulseSpec& pulse, double t) {
  FieldSample out;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPulse>) {
          out.mode = p.mode;
          out.phase = p.phase;
          if (std::abs(t - p.t0) <= kGaussSupportFwhm * p.fwhm) {
            const double g = gauss(t, p.t0, p.fwhm);
            for (int i = 0; i < 3; ++i) out.amplitude[i] = p.peak[i] * g;
          }
        } else if constexpr (std::is_same_v<T, KickTrain>) {
          out.mode = CarrierMode::Averaged;  // kicks are events, not fields
        } else if constexpr (std::is_same_v<T, TwoColorPulse>) {
          out.mode = CarrierMode::Averaged;
          out.two_color = true;
          out.phi = p.phi;
          if (std::abs(t - p.t0) <= kGaussSupportFwhm * p.fwhm) {
            const double g = gauss(t, p.t0, p.fwhm);
            out.e1 = p.e1 * g;
            out.e2 = p.e2 * g;
          }
        } else if constexpr (std::is_same_v<T, HalfCyclePulse>) {
          out.mode = CarrierMode::Resonant;
          out.amplitude[2] = half_cycle_value(p, t);
        } else if constexpr (std::is_same_v<T, RampPulse>) {
          out.mode = CarrierMode::Averaged;
          out.amplitude[2] = ramp_value(p, t);
        }
      },
      pulse);
  return out;
}

std::pair<double, double> support(const PulseSpec& pulse) {
  return std::visit(
      [](const auto& p) -> std::pair<double, double> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPulse>) {
          return {p.t0 - kGaussSupportFwhm * p.fwhm,
                  p.t0 + kGaussSupportFwhm * p.fwhm};
        } else if constexpr (std::is_same_v<T, KickTrain>) {
          return {p.t_first, p.t_first + (p.count - 1) * p.period};
        } else if constexpr (std::is_same_v<T, TwoColorPulse>) {
          return {p.t0 - kGaussSupportFwhm * p.fwhm,
                  p.t0 + kGaussSupportFwhm * p.fwhm};
        } else if constexpr (std::is_same_v<T, HalfCyclePulse>) {
          const double tail = p.zero_area ? kTailRatio : 0.0;
          return {p.t0, p.t0 + (1.0 + tail) * p.duration};
        } else {
          return {p.t_on, p.t_on + p.rise + p.hold + p.fall};
        }
      },
      pulse);
}

double field_area(const PulseSpec& pulse) {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HalfCyclePulse>) {
          // each sin^2 lobe integrates to amplitude * width / 2 and the
          // zero-area tail is built to cancel the main lobe exactly
          const double main = 0.5 * p.amplitude * p.duration;
          return p.zero_area ? 0.0 : main;
        } else if constexpr (std::is_same_v<T, GaussianPulse>) {
          if (p.mode == CarrierMode::Resonant) {
            return p.peak[2] * p.fwhm * 0.5 * std::sqrt(kPi / kLn2);
          }
          return 0.0;  // carrier averages to zero
        } else {
          return 0.0;
        }
      },
      pulse);
}

double envelope_sq_integral(const PulseSpec& pulse) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPulse>) {
          double s = 0.0;
          for (double a : p.peak) s += a * a;
          return s * gauss_sq_integral(p.fwhm);
        } else if constexpr (std::is_same_v<T, KickTrain>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, TwoColorPulse>) {
          return (p.e1 * p.e1 + p.e2 * p.e2) * gauss_sq_integral(p.fwhm);
        } else if constexpr (std::is_same_v<T, HalfCyclePulse>) {
          // integral of sin^4 over one lobe = (3/8) width
          const double main = 0.375 * p.amplitude * p.amplitude * p.duration;
          if (!p.zero_area) return main;
          const double tail_amp = p.amplitude / kTailRatio;
          return main + 0.375 * tail_amp * tail_amp * kTailRatio * p.duration;
        } else {
          const double s2 = p.strength * p.strength;
          return s2 * (p.hold + (p.rise + p.fall) / 3.0);
        }
      },
      pulse);
}

double kick_strength(const PulseSpec& pulse, const RotorSpec& spec) {
  if (const auto* train = std::get_if<KickTrain>(&pulse)) {
    return train->count * train->strength;
  }
  // sudden limit of the averaged interaction: exp(i P cos^2) with
  // P = (dalpha/4) int E_Z^2 dt; only the Z envelope contributes
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        double int_sq = 0.0;
        if constexpr (std::is_same_v<T, GaussianPulse>) {
          int_sq = p.peak[2] * p.peak[2] * gauss_sq_integral(p.fwhm);
        } else if constexpr (std::is_same_v<T, TwoColorPulse>) {
          int_sq = (p.e1 * p.e1 + p.e2 * p.e2) * gauss_sq_integral(p.fwhm);
        } else if constexpr (std::is_same_v<T, KickTrain>) {
          int_sq = 0.0;
        } else {
          int_sq = envelope_sq_integral(pulse);
        }
        return 0.25 * spec.delta_alpha() * int_sq;
      },
      pulse);
}

bool sudden_limit_ok(const PulseSpec& pulse, const RotorSpec& spec) {
  if (spec.B <= 0.0) return true;
  // physical duration, not the padded numerical support
  const double width = std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPulse>) return p.fwhm;
        else if constexpr (std::is_same_v<T, TwoColorPulse>) return p.fwhm;
        else if constexpr (std::is_same_v<T, HalfCyclePulse>) return p.duration;
        else if constexpr (std::is_same_v<T, RampPulse>)
          return p.rise + p.hold + p.fall;
        else return 0.0;
      },
      pulse);
  const double t_rev = kPi / spec.B;
  return width < 0.1 * t_rev;
}

double pulse_energy(const PulseSpec& pulse, const RotorSpec& spec) {
  if (const auto* train = std::get_if<KickTrain>(&pulse)) {
    const double da = spec.delta_alpha();
    if (da == 0.0) return std::abs(train->strength) * train->count;
    return 4.0 * std::abs(train->strength) * train->count / std::abs(da);
  }
  return envelope_sq_integral(pulse);
}

namespace {

Unitary exponential_of(const Operator& op, double scale) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.mat);
  const Eigen::VectorXd& ev = es.eigenvalues();
  Eigen::VectorXcd phases(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    phases[i] = std::polar(1.0, scale * ev[i]);
  }
  Unitary u;
  u.basis = op.basis;
  u.mat = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  return u;
}

}  // namespace

Unitary sudden_propagator(std::shared_ptr<const BasisSet> basis, double P) {
  if (!std::isfinite(P)) throw std::invalid_argument("sudden_propagator: P not finite");
  return exponential_of(cos_product(std::move(basis), SpaceAxis::Z, SpaceAxis::Z), P);
}

Unitary sudden_orientation_propagator(std::shared_ptr<const BasisSet> basis,
                                      double Q) {
  if (!std::isfinite(Q)) {
    throw std::invalid_argument("sudden_orientation_propagator: Q not finite");
  }
  return exponential_of(direction_cosine(std::move(basis), SpaceAxis::Z), Q);
}

}  // namespace rotorsim
