#include "rotorsim/classical.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rotorsim/constants.hpp"
#include "rotorsim/quadrature.hpp"

namespace rotorsim {
namespace classical {

void InertiaSpec::validate() const {
  if (!(iz > 0.0) || !(iy >= iz) || !(ix >= iy) || !std::isfinite(ix)) {
    throw std::invalid_argument(
        "InertiaSpec: require I_x >= I_y >= I_z > 0 (got " +
        std::to_string(ix) + ", " + std::to_string(iy) + ", " +
        std::to_string(iz) + ")");
  }
}

Eigen::Matrix3d rotation_matrix(double phi, double theta, double chi) {
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cc = std::cos(chi), sc = std::sin(chi);
  Eigen::Matrix3d c;
  c << cf * cc * ct - sf * sc, sf * cc * ct + cf * sc, -st * cc,
      -cf * sc * ct - sf * cc, -sf * sc * ct + cf * cc, st * sc,
      st * cf, st * sf, ct;
  return c;
}

void euler_angles_from_matrix(const Eigen::Matrix3d& c, double& phi,
                              double& theta, double& chi) {
  const double ct = std::clamp(c(2, 2), -1.0, 1.0);
  theta = std::acos(ct);
  const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  if (st > 1e-12) {
    phi = std::atan2(c(2, 1), c(2, 0));
    chi = std::atan2(c(1, 2), -c(0, 2));
  } else {
    chi = 0.0;
    phi = (ct > 0.0) ? std::atan2(c(0, 1), c(0, 0))
                     : std::atan2(-c(0, 1), -c(0, 0));
  }
}

Eigen::Quaterniond quaternion_from_euler(double phi, double theta, double chi) {
  // passive zyz: C = Rz(chi) Ry(theta) Rz(phi) as a frame transform
  return Eigen::Quaterniond(
      Eigen::AngleAxisd(-chi, Eigen::Vector3d::UnitZ()) *
      Eigen::AngleAxisd(-theta, Eigen::Vector3d::UnitY()) *
      Eigen::AngleAxisd(-phi, Eigen::Vector3d::UnitZ()));
}

Eigen::Vector3d euler_angle_rates(const InertiaSpec& inertia, double j_mag,
                                  double theta, double chi) {
  const double sc = std::sin(chi), cc = std::cos(chi);
  const double theta_dot =
      j_mag * (1.0 / inertia.iy - 1.0 / inertia.ix) * std::sin(theta) * sc * cc;
  const double phi_dot = j_mag * (sc * sc / inertia.iy + cc * cc / inertia.ix);
  const double chi_dot =
      j_mag * (1.0 / inertia.iz - sc * sc / inertia.iy - cc * cc / inertia.ix) *
      std::cos(theta);
  return {theta_dot, phi_dot, chi_dot};
}

ClassicalState state_with_j_along_z(double j_mag, double theta, double phi,
                                    double chi) {
  ClassicalState s;
  s.theta = theta;
  s.phi = phi;
  s.chi = chi;
  // body components of the space-Z unit vector: third column of C
  s.j_body = j_mag * Eigen::Vector3d(-std::sin(theta) * std::cos(chi),
                                     std::sin(theta) * std::sin(chi),
                                     std::cos(theta));
  return s;
}

double rotational_energy(const InertiaSpec& inertia, const Eigen::Vector3d& j) {
  return 0.5 * (j.x() * j.x() / inertia.ix + j.y() * j.y() / inertia.iy +
                j.z() * j.z() / inertia.iz);
}

namespace {

using State7 = Eigen::Matrix<double, 7, 1>;  // (J_body, quaternion wxyz)

State7 pack(const Eigen::Vector3d& j, const Eigen::Quaterniond& q) {
  State7 y;
  y << j.x(), j.y(), j.z(), q.w(), q.x(), q.y(), q.z();
  return y;
}

void derivative(const InertiaSpec& inertia, const State7& y, State7& dy) {
  const Eigen::Vector3d j(y[0], y[1], y[2]);
  const Eigen::Vector3d omega(j.x() / inertia.ix, j.y() / inertia.iy,
                              j.z() / inertia.iz);
  const Eigen::Vector3d jdot = j.cross(omega);
  // qdot = -1/2 (0, omega) * q keeps v_body = R(q) v_space consistent
  const Eigen::Quaterniond q(y[3], y[4], y[5], y[6]);
  const Eigen::Quaterniond w(0.0, omega.x(), omega.y(), omega.z());
  const Eigen::Quaterniond qdot = w * q;
  dy << jdot.x(), jdot.y(), jdot.z(), -0.5 * qdot.w(), -0.5 * qdot.x(),
      -0.5 * qdot.y(), -0.5 * qdot.z();
}

// Dormand-Prince 5(4)
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0,
                 kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                 kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

// one accepted step of size at most h_max; updates y, k1 (FSAL), t and the
// controller step h
void dp_step(const InertiaSpec& inertia, State7& y, State7& k1, double& t,
             double& h, double h_max, double tol) {
  for (int attempt = 0; attempt < 80; ++attempt) {
    const double hs = std::min(h, h_max);
    State7 k2, k3, k4, k5, k6, k7, tmp, y_next;
    tmp = y + hs * kA21 * k1;
    derivative(inertia, tmp, k2);
    tmp = y + hs * (kA31 * k1 + kA32 * k2);
    derivative(inertia, tmp, k3);
    tmp = y + hs * (kA41 * k1 + kA42 * k2 + kA43 * k3);
    derivative(inertia, tmp, k4);
    tmp = y + hs * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4);
    derivative(inertia, tmp, k5);
    tmp = y + hs * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
    derivative(inertia, tmp, k6);
    y_next = y + hs * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
    derivative(inertia, y_next, k7);

    const State7 err_vec =
        hs * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);
    double err = 0.0;
    for (int i = 0; i < 7; ++i) {
      const double scale = tol * (1.0 + std::abs(y[i]));
      err += (err_vec[i] / scale) * (err_vec[i] / scale);
    }
    err = std::sqrt(err / 7.0);

    if (err <= 1.0) {
      t += hs;
      y = y_next;
      k1 = k7;
      const double grown =
          hs * std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
      // an output-time cap must not shrink the controller step
      h = (hs < h) ? std::max(h, grown) : grown;
      return;
    }
    h = hs * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    if (h < 1e-14) {
      throw std::runtime_error("integrate_euler: step size underflow");
    }
  }
  throw std::runtime_error("integrate_euler: step control failed to converge");
}

}  // namespace

ClassicalTrajectory integrate_euler(const InertiaSpec& inertia,
                                    const ClassicalState& initial,
                                    double t_span, double tol, int n_outputs) {
  inertia.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("integrate_euler: tol must be > 0");
  if (!(t_span > 0.0)) throw std::invalid_argument("integrate_euler: t_span must be > 0");
  if (n_outputs < 2) throw std::invalid_argument("integrate_euler: n_outputs < 2");
  if (initial.j_body.norm() == 0.0) {
    throw std::invalid_argument("integrate_euler: |J| must be > 0");
  }

  ClassicalTrajectory out;
  out.t.reserve(n_outputs);

  Eigen::Quaterniond q =
      quaternion_from_euler(initial.phi, initial.theta, initial.chi);
  State7 y = pack(initial.j_body, q);
  State7 k1;
  derivative(inertia, y, k1);

  auto emit = [&](double t_emit, const State7& s) {
    ClassicalState cs;
    cs.j_body = Eigen::Vector3d(s[0], s[1], s[2]);
    Eigen::Quaterniond qq(s[3], s[4], s[5], s[6]);
    qq.normalize();
    euler_angles_from_matrix(qq.toRotationMatrix(), cs.phi, cs.theta, cs.chi);
    out.t.push_back(t_emit);
    out.states.push_back(cs);
    out.energy.push_back(rotational_energy(inertia, cs.j_body));
    out.j_norm_sq.push_back(cs.j_body.squaredNorm());
  };

  const double dt_out = t_span / (n_outputs - 1);
  double t = 0.0;
  emit(0.0, y);
  double h = std::min(dt_out, 0.01 * t_span);

  for (int i = 1; i < n_outputs; ++i) {
    const double t_target = i * dt_out;
    while (t < t_target - 1e-13 * t_span) {
      dp_step(inertia, y, k1, t, h, t_target - t, tol);
      // attitude constraint; not a dynamical conservation law
      const double qn =
          std::sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5] + y[6] * y[6]);
      y[3] /= qn;
      y[4] /= qn;
      y[5] /= qn;
      y[6] /= qn;
    }
    emit(t_target, y);
  }
  return out;
}

std::vector<EmRow> em_diagram(const InertiaSpec& inertia,
                              const std::vector<double>& j_values) {
  inertia.validate();
  std::vector<EmRow> rows;
  rows.reserve(j_values.size());
  for (double j : j_values) {
    if (j < 0.0) throw std::invalid_argument("em_diagram: J must be >= 0");
    const double j2 = j * j;
    rows.push_back({j, 0.5 * j2 / inertia.ix, 0.5 * j2 / inertia.iy,
                    0.5 * j2 / inertia.iz});
  }
  return rows;
}

MotionClass classify(const InertiaSpec& inertia, double energy, double j_mag) {
  inertia.validate();
  if (!std::isfinite(energy) || !std::isfinite(j_mag)) {
    throw std::invalid_argument("classify: non-finite input");
  }
  const double j2 = j_mag * j_mag;
  const double e_min = 0.5 * j2 / inertia.ix;
  const double e_sep = 0.5 * j2 / inertia.iy;
  const double e_max = 0.5 * j2 / inertia.iz;
  const double tol = 1e-12 * std::max(j2, 1e-300);
  if (energy < e_min - tol || energy > e_max + tol) return MotionClass::Forbidden;
  if (std::abs(energy - e_sep) <= tol) return MotionClass::Separatrix;
  return energy > e_sep ? MotionClass::Rotating : MotionClass::Oscillating;
}

std::vector<double> tennis_racket_flips(const ClassicalTrajectory& traj) {
  std::vector<double> flips;
  for (std::size_t i = 1; i < traj.states.size(); ++i) {
    const double a = traj.states[i - 1].j_body.y();
    const double b = traj.states[i].j_body.y();
    if (a == 0.0 || b == 0.0) continue;
    if ((a > 0.0) != (b > 0.0)) {
      const double frac = a / (a - b);
      flips.push_back(traj.t[i - 1] + frac * (traj.t[i] - traj.t[i - 1]));
    }
  }
  return flips;
}

double free_rotation_period(const InertiaSpec& inertia, double energy,
                            double j_mag) {
  const MotionClass mc = classify(inertia, energy, j_mag);
  if (mc == MotionClass::Forbidden) {
    throw std::invalid_argument("free_rotation_period: (E, J) not reachable");
  }
  if (mc == MotionClass::Separatrix) {
    return std::numeric_limits<double>::infinity();
  }
  const double a = 1.0 / inertia.ix;
  const double b = 1.0 / inertia.iy;
  const double c = 1.0 / inertia.iz;
  const double e2 = 2.0 * energy;
  const double j2 = j_mag * j_mag;

  // substituting J_y = y_m sin(u) removes the turning-point singularities:
  // T = 2 int du / (sqrt(s) sqrt(base - amp2 sin^2 u)), u in [-pi/2, pi/2]
  double s, base, amp2;
  if (mc == MotionClass::Rotating) {
    const double ym2 = (c * j2 - e2) / (c - b);
    s = c - b;
    base = e2 - a * j2;
    amp2 = (b - a) * ym2;
  } else {
    const double ym2 = (e2 - a * j2) / (b - a);
    s = b - a;
    base = c * j2 - e2;
    amp2 = (c - b) * ym2;
  }

  double prev = 0.0;
  for (int n = 64; n <= (1 << 16); n *= 2) {
    const GaussLegendreRule gl = gauss_legendre(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = 0.5 * kPi * gl.nodes[i];
      const double su = std::sin(u);
      sum += gl.weights[i] / std::sqrt(base - amp2 * su * su);
    }
    const double period = kPi * sum / std::sqrt(s);
    if (n > 64 && std::abs(period - prev) <= 1e-10 * std::abs(period)) {
      return period;
    }
    prev = period;
  }
  return prev;
}

}  // namespace classical
}  // namespace rotorsim
