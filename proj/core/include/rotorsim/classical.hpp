#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <vector>

namespace rotorsim {
namespace classical {

// Moments of inertia with the I_x >= I_y >= I_z > 0 convention.
struct InertiaSpec {
  double ix = 1.0, iy = 1.0, iz = 1.0;
  void validate() const;
};

// Body-frame angular momentum plus the zyz Euler angles of the body frame
// in the space frame.
struct ClassicalState {
  Eigen::Vector3d j_body = Eigen::Vector3d::Zero();
  double theta = 0.0, phi = 0.0, chi = 0.0;
};

// Frame matrix C(phi,theta,chi) with v_body = C v_space; rows are the body
// axes in space coordinates, so row 3 holds the direction cosines of the
// body z axis.
Eigen::Matrix3d rotation_matrix(double phi, double theta, double chi);

// Euler angles back out of a frame matrix (theta in [0, pi]); the chi = 0
// convention resolves the gimbal line.
void euler_angles_from_matrix(const Eigen::Matrix3d& c, double& phi,
                              double& theta, double& chi);

Eigen::Quaterniond quaternion_from_euler(double phi, double theta, double chi);

// Time derivatives (theta_dot, phi_dot, chi_dot) of the Euler angles for
// free rotation with the angular momentum along space Z.
Eigen::Vector3d euler_angle_rates(const InertiaSpec& inertia, double j_mag,
                                  double theta, double chi);

// State whose angular momentum of magnitude j_mag points along space Z,
// with the body frame at the given Euler angles.
ClassicalState state_with_j_along_z(double j_mag, double theta, double phi,
                                    double chi);

double rotational_energy(const InertiaSpec& inertia, const Eigen::Vector3d& j);

struct ClassicalTrajectory {
  std::vector<double> t;
  std::vector<ClassicalState> states;
  std::vector<double> energy;
  std::vector<double> j_norm_sq;
};

// Adaptive Dormand-Prince integration of the Euler equations
// dJ/dt = J x Omega, Omega_k = J_k / I_k, coupled to the attitude carried
// as a quaternion (immune to the theta -> 0, pi coordinate singularities);
// Euler angles are reported at n_outputs uniform times.
ClassicalTrajectory integrate_euler(const InertiaSpec& inertia,
                                    const ClassicalState& initial,
                                    double t_span, double tol,
                                    int n_outputs = 2000);

struct EmRow {
  double j;
  double e_min, e_sep, e_max;
};

std::vector<EmRow> em_diagram(const InertiaSpec& inertia,
                              const std::vector<double>& j_values);

enum class MotionClass { Rotating, Oscillating, Separatrix, Forbidden };

MotionClass classify(const InertiaSpec& inertia, double energy, double j_mag);

// Times at which the intermediate-axis component J_y changes sign,
// linearly interpolated between trajectory samples.
std::vector<double> tennis_racket_flips(const ClassicalTrajectory& traj);

// Period of the closed J-orbit at (E, J), by Gauss-Legendre quadrature of
// the period integral with node doubling to 1e-10 relative accuracy.
// Diverges on the separatrix (returns +inf); throws for forbidden (E, J).
double free_rotation_period(const InertiaSpec& inertia, double energy,
                            double j_mag);

}  // namespace classical
}  // namespace rotorsim
