#include <doctest.h>

#include <cmath>
#include <random>

#include "rotorsim/classical.hpp"
#include "rotorsim/constants.hpp"

using namespace rotorsim;
using namespace rotorsim::classical;

TEST_CASE("rotation matrix is orthogonal and matches the quaternion map") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const double phi = u(rng), theta = std::abs(u(rng)) * 0.5, chi = u(rng);
    const Eigen::Matrix3d c = rotation_matrix(phi, theta, chi);
    CHECK((c * c.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-13);
    CHECK(c.determinant() == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::Matrix3d cq =
        quaternion_from_euler(phi, theta, chi).toRotationMatrix();
    CHECK((c - cq).norm() < 1e-13);

    double p2, t2, c2;
    euler_angles_from_matrix(c, p2, t2, c2);
    CHECK((rotation_matrix(p2, t2, c2) - c).norm() < 1e-12);
  }
}

TEST_CASE("body z row carries the direction cosines") {
  const Eigen::Matrix3d c = rotation_matrix(0.4, 1.1, -0.8);
  CHECK(c(2, 0) == doctest::Approx(std::sin(1.1) * std::cos(0.4)));
  CHECK(c(2, 1) == doctest::Approx(std::sin(1.1) * std::sin(0.4)));
  CHECK(c(2, 2) == doctest::Approx(std::cos(1.1)));
}

TEST_CASE("principal-axis rotation is a fixed point") {
  InertiaSpec inertia{3.0, 2.0, 1.0};
  ClassicalState s0;
  s0.j_body = Eigen::Vector3d(0.0, 0.0, 1.3);
  s0.theta = 0.0;
  ClassicalTrajectory traj = integrate_euler(inertia, s0, 10.0, 1e-10, 200);
  for (const auto& st : traj.states) {
    CHECK((st.j_body - s0.j_body).norm() < 1e-9);
  }
}

TEST_CASE("symmetric top: J_z constant, (J_x, J_y) circulates analytically") {
  InertiaSpec inertia{2.0, 2.0, 1.0};
  ClassicalState s0;
  s0.j_body = Eigen::Vector3d(0.6, 0.0, 0.9);
  s0.theta = 0.6;
  ClassicalTrajectory traj = integrate_euler(inertia, s0, 8.0, 1e-11, 400);

  const double rate = s0.j_body.z() * (1.0 / inertia.iz - 1.0 / inertia.ix);
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const auto& j = traj.states[i].j_body;
    CHECK(j.z() == doctest::Approx(0.9).epsilon(1e-9));
    // J+ = (Jx + i Jy) rotates at the body precession rate; phase convention
    // fixed by the equations of motion
    const double ang = -rate * traj.t[i];
    CHECK(j.x() == doctest::Approx(0.6 * std::cos(ang)).epsilon(1e-7));
    CHECK(j.y() == doctest::Approx(0.6 * std::sin(ang)).epsilon(1e-7));
  }
}

TEST_CASE("conservation over long spans for random initial data") {
  InertiaSpec inertia{2.4, 1.7, 0.9};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 2; ++trial) {
    ClassicalState s0;
    s0.j_body = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized() * 1.4;
    // ~1e3 characteristic periods (T ~ 2 pi I / J)
    const double span = 1e3 * kTwoPi * inertia.iy / 1.4;
    ClassicalTrajectory traj = integrate_euler(inertia, s0, span, 1e-13, 500);
    const double e0 = traj.energy.front();
    const double j0 = traj.j_norm_sq.front();
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
      CHECK(std::abs(traj.energy[i] - e0) / e0 < 1e-9);
      CHECK(std::abs(traj.j_norm_sq[i] - j0) / j0 < 1e-9);
    }
    // integrated pairs classify as non-forbidden
    CHECK(classify(inertia, e0, std::sqrt(j0)) != MotionClass::Forbidden);
  }
}

TEST_CASE("space-frame J is conserved (attitude consistency)") {
  InertiaSpec inertia{3.0, 2.0, 1.0};
  ClassicalState s0 = state_with_j_along_z(1.2, 1.0, 0.3, 0.7);
  ClassicalTrajectory traj = integrate_euler(inertia, s0, 20.0, 1e-11, 300);
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const auto& st = traj.states[i];
    const Eigen::Matrix3d c = rotation_matrix(st.phi, st.theta, st.chi);
    const Eigen::Vector3d j_space = c.transpose() * st.j_body;
    CHECK((j_space - Eigen::Vector3d(0.0, 0.0, 1.2)).norm() < 1e-7);
  }
}

TEST_CASE("euler-angle rates match the quaternion trajectory") {
  InertiaSpec inertia{2.2, 1.6, 1.0};
  ClassicalState s0 = state_with_j_along_z(1.0, 0.9, 0.2, 0.5);
  const double dt = 1e-5;
  ClassicalTrajectory traj = integrate_euler(inertia, s0, dt * 2, 1e-12, 3);
  const Eigen::Vector3d rates = euler_angle_rates(inertia, 1.0, 0.9, 0.5);
  const double dtheta = (traj.states[2].theta - traj.states[0].theta) / (2 * dt);
  const double dphi = (traj.states[2].phi - traj.states[0].phi) / (2 * dt);
  const double dchi = (traj.states[2].chi - traj.states[0].chi) / (2 * dt);
  CHECK(dtheta == doctest::Approx(rates[0]).epsilon(1e-5));
  CHECK(dphi == doctest::Approx(rates[1]).epsilon(1e-5));
  CHECK(dchi == doctest::Approx(rates[2]).epsilon(1e-5));
}

TEST_CASE("em diagram rows") {
  InertiaSpec inertia{2.0, 1.5, 1.0};
  auto rows = em_diagram(inertia, {0.0, 1.0});
  CHECK(rows[0].e_min == 0.0);
  CHECK(rows[0].e_sep == 0.0);
  CHECK(rows[0].e_max == 0.0);
  CHECK(rows[1].e_min == doctest::Approx(0.25));
  CHECK(rows[1].e_sep == doctest::Approx(1.0 / 3.0));
  CHECK(rows[1].e_max == doctest::Approx(0.5));
}

TEST_CASE("classification") {
  InertiaSpec inertia{2.0, 1.5, 1.0};
  CHECK(classify(inertia, 0.4, 1.0) == MotionClass::Rotating);
  CHECK(classify(inertia, 0.3, 1.0) == MotionClass::Oscillating);
  CHECK(classify(inertia, 0.6, 1.0) == MotionClass::Forbidden);
  CHECK(classify(inertia, 0.2, 1.0) == MotionClass::Forbidden);
  CHECK(classify(inertia, 1.0 / 3.0, 1.0) == MotionClass::Separatrix);

  // randomized: formula comparison
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    double v[3] = {u(rng), u(rng), u(rng)};
    std::sort(v, v + 3);
    InertiaSpec in{v[2], v[1], v[0]};
    const double j = u(rng);
    const double e = u(rng);
    const MotionClass mc = classify(in, e, j);
    const double e_sep = 0.5 * j * j / in.iy;
    if (e < 0.5 * j * j / in.ix || e > 0.5 * j * j / in.iz) {
      CHECK(mc == MotionClass::Forbidden);
    } else if (e > e_sep) {
      CHECK(mc == MotionClass::Rotating);
    } else if (e < e_sep) {
      CHECK(mc == MotionClass::Oscillating);
    }
  }
}

TEST_CASE("oscillating trajectories never wind; rotating ones do") {
  InertiaSpec inertia{2.4, 1.7, 0.9};
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  int rotating_seen = 0, oscillating_seen = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ClassicalState s0;
    s0.j_body = Eigen::Vector3d(g(rng), g(rng), g(rng));
    if (s0.j_body.norm() < 0.3) continue;
    const double e = rotational_energy(inertia, s0.j_body);
    const double j = s0.j_body.norm();
    const MotionClass mc = classify(inertia, e, j);
    if (mc == MotionClass::Separatrix) continue;
    REQUIRE(mc != MotionClass::Forbidden);
    const double period = free_rotation_period(inertia, e, j);
    ClassicalTrajectory traj =
        integrate_euler(inertia, s0, 3.0 * period, 1e-10, 600);
    // rotating: J_z keeps its sign; oscillating: J_x keeps its sign
    bool jz_flips = false, jx_flips = false;
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
      if (traj.states[i].j_body.z() * traj.states[0].j_body.z() < 0.0) jz_flips = true;
      if (traj.states[i].j_body.x() * traj.states[0].j_body.x() < 0.0) jx_flips = true;
    }
    if (mc == MotionClass::Rotating) {
      CHECK(!jz_flips);
      ++rotating_seen;
    } else {
      CHECK(!jx_flips);
      ++oscillating_seen;
    }
  }
  CHECK(rotating_seen > 10);
  CHECK(oscillating_seen > 10);
}

TEST_CASE("tennis racket flips near the intermediate axis") {
  InertiaSpec inertia{3.0, 2.0, 1.0};
  ClassicalState s0;
  s0.j_body = Eigen::Vector3d(0.02, 1.0, 0.02);
  const double e = rotational_energy(inertia, s0.j_body);
  const double j = s0.j_body.norm();
  const double period = free_rotation_period(inertia, e, j);

  ClassicalTrajectory traj =
      integrate_euler(inertia, s0, 6.0 * period, 1e-11, 8000);
  const std::vector<double> flips = tennis_racket_flips(traj);
  REQUIRE(flips.size() >= 8);

  // flips come T/2 apart; spacing matches the period integral within 1%
  for (std::size_t i = 1; i < flips.size(); ++i) {
    const double spacing = flips[i] - flips[i - 1];
    CHECK(std::abs(2.0 * spacing - period) / period < 0.01);
  }

  // flip count doubles when the span doubles
  ClassicalTrajectory traj2 =
      integrate_euler(inertia, s0, 12.0 * period, 1e-11, 16000);
  const std::size_t n2 = tennis_racket_flips(traj2).size();
  CHECK(std::abs(static_cast<double>(n2) - 2.0 * flips.size()) <= 1.0);
}

TEST_CASE("stable-axis spins produce no flips") {
  InertiaSpec inertia{3.0, 2.0, 1.0};
  ClassicalState s0;
  s0.j_body = Eigen::Vector3d(0.0, 0.0, 1.0);
  ClassicalTrajectory traj = integrate_euler(inertia, s0, 30.0, 1e-10, 500);
  CHECK(tennis_racket_flips(traj).empty());
}

TEST_CASE("free_rotation_period special cases") {
  // symmetric top closed form: T = 2 pi / (J_z (1/I_z - 1/I_x))
  InertiaSpec sym{2.0, 2.0, 1.0};
  Eigen::Vector3d j(0.5, 0.0, 1.1);
  const double e = rotational_energy(sym, j);
  const double period = free_rotation_period(sym, e, j.norm());
  const double expect = kTwoPi / (1.1 * (1.0 / 1.0 - 1.0 / 2.0));
  CHECK(period == doctest::Approx(expect).epsilon(1e-9));

  InertiaSpec in{2.0, 1.5, 1.0};
  CHECK(std::isinf(free_rotation_period(in, 1.0 / 3.0, 1.0)));
  CHECK_THROWS_AS(free_rotation_period(in, 0.8, 1.0), std::invalid_argument);
}

TEST_CASE("inertia validation") {
  CHECK_THROWS_AS((InertiaSpec{1.0, 2.0, 0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((InertiaSpec{2.0, 1.0, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(integrate_euler(InertiaSpec{2.0, 1.5, 1.0}, ClassicalState{},
                                  1.0, 1e-9),
                  std::invalid_argument);
}
