#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "rotorsim/constants.hpp"
#include "rotorsim/operators.hpp"
#include "rotorsim/quadrature.hpp"
#include "rotorsim/wigner.hpp"

using namespace rotorsim;
using std::abs;
using std::sqrt;

namespace {

// Quadrature oracle for <bra| f |ket> with f given as a closed-form angular
// function. Basis functions are sqrt((2j+1)/(8 pi^2)) D^{j*}_{mk}.
Complex oracle_element(const RotorKet& bra, const RotorKet& ket,
                       const EulerFunction& f, int f_band) {
  const auto opts = EulerQuadratureOptions::for_band_limit(bra.j + ket.j + f_band);
  const auto integrand = [&](double phi, double theta, double chi) {
    return wigner_D(bra.j, bra.m, bra.k, phi, theta, chi) * f(phi, theta, chi) *
           std::conj(wigner_D(ket.j, ket.m, ket.k, phi, theta, chi));
  };
  const double norm = sqrt((2.0 * bra.j + 1.0) * (2.0 * ket.j + 1.0)) /
                      (8.0 * kPi * kPi);
  return norm * euler_quadrature(integrand, opts);
}

EulerFunction cos_axis_fn(SpaceAxis K) {
  switch (K) {
    case SpaceAxis::X:
      return [](double phi, double theta, double) {
        return Complex(std::sin(theta) * std::cos(phi), 0.0);
      };
    case SpaceAxis::Y:
      return [](double phi, double theta, double) {
        return Complex(std::sin(theta) * std::sin(phi), 0.0);
      };
    case SpaceAxis::Z:
      return [](double, double theta, double) {
        return Complex(std::cos(theta), 0.0);
      };
  }
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("direction cosines agree with the zyz rotation matrix pointwise") {
  // the body-z row of R evaluated at sample angles
  const double phi = 0.71, theta = 1.13, chi = -2.4;
  for (SpaceAxis K : {SpaceAxis::X, SpaceAxis::Y, SpaceAxis::Z}) {
    const Complex got =
        AngularExpansion::direction_cosine(K).evaluate(phi, theta, chi);
    const Complex expect = cos_axis_fn(K)(phi, theta, chi);
    CHECK(abs(got - expect) < 1e-14);
  }
}

TEST_CASE("expansion products agree pointwise with function products") {
  const AngularExpansion cx = AngularExpansion::direction_cosine(SpaceAxis::X);
  const AngularExpansion cy = AngularExpansion::direction_cosine(SpaceAxis::Y);
  const AngularExpansion cz = AngularExpansion::direction_cosine(SpaceAxis::Z);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double phi = ang(rng), theta = std::abs(ang(rng)), chi = ang(rng);
    const Complex x = cx.evaluate(phi, theta, chi);
    const Complex y = cy.evaluate(phi, theta, chi);
    const Complex z = cz.evaluate(phi, theta, chi);
    CHECK(abs((cx * cy).evaluate(phi, theta, chi) - x * y) < 1e-13);
    CHECK(abs((cz * cz).evaluate(phi, theta, chi) - z * z) < 1e-13);
    CHECK(abs((cz * cz * cz).evaluate(phi, theta, chi) - z * z * z) < 1e-13);
  }
}

TEST_CASE("direction_cosine matrix elements: frozen values") {
  auto basis = BasisSet::build(TopClass::Linear, 3);
  Operator cz = direction_cosine(basis, SpaceAxis::Z);
  const int i000 = basis->index_of(0, 0, 0);
  const int i100 = basis->index_of(1, 0, 0);
  CHECK(cz.mat(i000, i100).real() ==
        doctest::Approx(1.0 / sqrt(3.0)).epsilon(1e-13));
  CHECK(cz.mat(i000, i000) == Complex(0.0, 0.0));  // parity
}

TEST_CASE("cos_product frozen values and sum rule") {
  auto basis = BasisSet::build(TopClass::Linear, 4);
  Operator c2z = cos_product(basis, SpaceAxis::Z, SpaceAxis::Z);
  const int i000 = basis->index_of(0, 0, 0);
  const int i200 = basis->index_of(2, 0, 0);
  CHECK(c2z.mat(i000, i000).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(c2z.mat(i200, i000).real() ==
        doctest::Approx(2.0 / (3.0 * sqrt(5.0))).epsilon(1e-13));

  Eigen::MatrixXcd sum = c2z.mat;
  sum += cos_product(basis, SpaceAxis::X, SpaceAxis::X).mat;
  sum += cos_product(basis, SpaceAxis::Y, SpaceAxis::Y).mat;
  const Eigen::MatrixXcd id =
      Eigen::MatrixXcd::Identity(basis->dimension(), basis->dimension());
  CHECK((sum - id).norm() < 1e-12);
}

TEST_CASE("cos_product axis sum is identity on a symmetric-top basis") {
  auto basis = BasisSet::build(TopClass::ProlateSymmetric, 3);
  Eigen::MatrixXcd sum = cos_product(basis, SpaceAxis::X, SpaceAxis::X).mat +
                         cos_product(basis, SpaceAxis::Y, SpaceAxis::Y).mat +
                         cos_product(basis, SpaceAxis::Z, SpaceAxis::Z).mat;
  const Eigen::MatrixXcd id =
      Eigen::MatrixXcd::Identity(basis->dimension(), basis->dimension());
  CHECK((sum - id).norm() < 1e-12);
}

TEST_CASE("cos_cubed frozen values") {
  auto basis = BasisSet::build(TopClass::Linear, 4);
  Operator c3 = cos_cubed(basis);
  const int i000 = basis->index_of(0, 0, 0);
  const int i100 = basis->index_of(1, 0, 0);
  const int i300 = basis->index_of(3, 0, 0);
  CHECK(c3.mat(i100, i000).real() ==
        doctest::Approx(3.0 / (5.0 * sqrt(3.0))).epsilon(1e-13));
  CHECK(c3.mat(i000, i000) == Complex(0.0, 0.0));
  CHECK(abs(c3.mat(i300, i000)) > 1e-3);  // delta j = 3 channel open

  CHECK_THROWS_AS(cos_cubed(BasisSet::build(TopClass::Asymmetric, 2)),
                  std::invalid_argument);
}

TEST_CASE("analytic matrix elements match the quadrature oracle") {
  // all coupling-window pairs on a small symmetric-top basis
  auto basis = BasisSet::build(TopClass::ProlateSymmetric, 2);
  struct Case {
    Operator op;
    EulerFunction fn;
    int band;
  };
  std::vector<Case> cases;
  cases.push_back({direction_cosine(basis, SpaceAxis::X), cos_axis_fn(SpaceAxis::X), 1});
  cases.push_back({direction_cosine(basis, SpaceAxis::Y), cos_axis_fn(SpaceAxis::Y), 1});
  cases.push_back({direction_cosine(basis, SpaceAxis::Z), cos_axis_fn(SpaceAxis::Z), 1});
  cases.push_back({cos_product(basis, SpaceAxis::X, SpaceAxis::Z),
                   [](double phi, double theta, double) {
                     return Complex(std::sin(theta) * std::cos(phi) * std::cos(theta), 0.0);
                   },
                   2});
  cases.push_back({cos_product(basis, SpaceAxis::X, SpaceAxis::Y),
                   [](double phi, double theta, double) {
                     return Complex(std::sin(theta) * std::cos(phi) *
                                        std::sin(theta) * std::sin(phi),
                                    0.0);
                   },
                   2});
  for (const auto& c : cases) {
    for (int a = 0; a < basis->dimension(); ++a) {
      for (int b = 0; b < basis->dimension(); ++b) {
        const Complex got = c.op.mat(a, b);
        const Complex expect =
            oracle_element(basis->state_at(a), basis->state_at(b), c.fn, c.band);
        CHECK(abs(got - expect) < 1e-10);
      }
    }
  }
}

TEST_CASE("operators are Hermitian by construction") {
  auto basis = BasisSet::build(TopClass::OblateSymmetric, 3);
  for (const Operator& op :
       {direction_cosine(basis, SpaceAxis::Y),
        cos_product(basis, SpaceAxis::Y, SpaceAxis::Z), cos_cubed(basis)}) {
    CHECK((op.mat - op.mat.adjoint()).norm() == 0.0);
  }
}

TEST_CASE("free_hamiltonian: linear") {
  RotorSpec spec;
  spec.B = 2.1;
  auto basis = BasisSet::build(TopClass::Linear, 3);
  Operator h = free_hamiltonian(spec, basis);
  CHECK(h.mat(basis->index_of(2, 0, 0), basis->index_of(2, 0, 0)).real() ==
        doctest::Approx(6.0 * spec.B));
  // centrifugal term
  spec.centrifugal_D = 1e-3;
  Operator hd = free_hamiltonian(spec, basis);
  CHECK(hd.mat(basis->index_of(3, 0, -1), basis->index_of(3, 0, -1)).real() ==
        doctest::Approx(12.0 * spec.B - 1e-3 * 144.0));
}

TEST_CASE("free_hamiltonian: prolate and oblate closed forms") {
  RotorSpec spec;
  spec.A = 1.0;
  spec.B = 1.0;
  spec.C = 2.5;
  auto basis = BasisSet::build(TopClass::ProlateSymmetric, 2);
  Operator h = free_hamiltonian(spec, basis);
  CHECK(h.mat(basis->index_of(1, 1, 0), basis->index_of(1, 1, 0)).real() ==
        doctest::Approx(spec.A + spec.C));
  CHECK(h.mat(basis->index_of(1, -1, 1), basis->index_of(1, -1, 1)).real() ==
        doctest::Approx(spec.A + spec.C));

  RotorSpec ob;
  ob.A = 0.7;
  ob.B = 1.9;
  ob.C = 1.9;
  auto ob_basis = BasisSet::build(TopClass::OblateSymmetric, 2);
  Operator ho = free_hamiltonian(ob, ob_basis);
  CHECK(ho.mat(ob_basis->index_of(2, 1, 0), ob_basis->index_of(2, 1, 0)).real() ==
        doctest::Approx(ob.C * 6.0 + (ob.A - ob.C)));
}

TEST_CASE("free_hamiltonian: asymmetric j=1 eigenvalues {A+B, A+C, B+C}") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    double v[3] = {u(rng), u(rng), u(rng)};
    std::sort(v, v + 3);
    RotorSpec spec;
    spec.A = v[0];
    spec.B = v[1];
    spec.C = v[2];
    auto basis = BasisSet::build(TopClass::Asymmetric, 1);
    Operator h = free_hamiltonian(spec, basis);
    // extract the m = 0, j = 1 block (k = -1, 0, 1)
    std::vector<int> idx = {basis->index_of(1, -1, 0), basis->index_of(1, 0, 0),
                            basis->index_of(1, 1, 0)};
    Eigen::Matrix3cd block;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) block(a, b) = h.mat(idx[a], idx[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(block);
    std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + 3);
    std::vector<double> expect = {spec.A + spec.B, spec.A + spec.C, spec.B + spec.C};
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < 3; ++i) CHECK(abs(got[i] - expect[i]) < 1e-12);
  }
}

TEST_CASE("free_hamiltonian: A=B=C asymmetric path gives spherical spectrum") {
  RotorSpec spec;
  spec.A = spec.B = spec.C = 1.3;
  auto basis = BasisSet::build(TopClass::Asymmetric, 3);
  Operator h = free_hamiltonian(spec, basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.mat);
  // count degeneracy per level
  std::map<int, int> counts;
  for (int i = 0; i < basis->dimension(); ++i) {
    const double e = es.eigenvalues()[i];
    for (int j = 0; j <= 3; ++j) {
      if (abs(e - spec.A * j * (j + 1)) < 1e-9) counts[j]++;
    }
  }
  for (int j = 0; j <= 3; ++j) CHECK(counts[j] == (2 * j + 1) * (2 * j + 1));
}

TEST_CASE("free_hamiltonian class mismatch rejected") {
  RotorSpec spec;
  spec.B = 1.0;
  spec.centrifugal_D = 0.01;
  CHECK_THROWS_AS(free_hamiltonian(spec, BasisSet::build(TopClass::Asymmetric, 1)),
                  std::invalid_argument);
}

TEST_CASE("resonant_interaction") {
  RotorSpec spec;
  spec.B = 1.0;
  spec.mu0 = 0.8;
  spec.alpha_par = 0.0;
  spec.alpha_perp = 0.0;
  auto basis = BasisSet::build(TopClass::Linear, 3);

  Operator zero = resonant_interaction(spec, basis, {0.0, 0.0, 0.0});
  CHECK(zero.mat.norm() == 0.0);

  const double ez = 1.7;
  Operator h = resonant_interaction(spec, basis, {0.0, 0.0, ez});
  Operator expect = (-spec.mu0 * ez) * direction_cosine(basis, SpaceAxis::Z);
  CHECK((h.mat - expect.mat).norm() < 1e-13);

  // Hermiticity for a random field with full polarizability
  spec.alpha_par = 1.1;
  spec.alpha_perp = 0.4;
  Operator hr = resonant_interaction(spec, basis, {0.3, -0.9, 0.5});
  CHECK((hr.mat - hr.mat.adjoint()).norm() == 0.0);
}

TEST_CASE("averaged_interaction") {
  RotorSpec spec;
  spec.B = 1.0;
  spec.alpha_par = 2.0;
  spec.alpha_perp = 0.5;
  auto basis = BasisSet::build(TopClass::Linear, 3);

  // circular polarization in (X, Y): cross term vanishes
  Operator circ =
      averaged_interaction(spec, basis, {1.3, 1.3, 0.0}, {kPi / 2, 0.0, 0.0});
  Operator xy_only = averaged_interaction(
      spec, basis, {1.3, 0.0, 0.0}, {0.0, 0.0, 0.0});
  Operator y_only = averaged_interaction(
      spec, basis, {0.0, 1.3, 0.0}, {0.0, 0.0, 0.0});
  CHECK((circ.mat - xy_only.mat - y_only.mat).norm() < 1e-12);

  // linear Z polarization: -(amp^2/4)(dalpha cos^2 + alpha_perp)
  const double amp = 0.9;
  Operator lin = averaged_interaction(spec, basis, {0.0, 0.0, amp}, {0.0, 0.0, 0.0});
  Eigen::MatrixXcd expect =
      (-0.25 * amp * amp * spec.delta_alpha()) *
          cos_product(basis, SpaceAxis::Z, SpaceAxis::Z).mat +
      (-0.25 * amp * amp * spec.alpha_perp) *
          Eigen::MatrixXcd::Identity(basis->dimension(), basis->dimension());
  CHECK((lin.mat - expect).norm() < 1e-13);

  Operator none = averaged_interaction(spec, basis, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  CHECK(none.mat.norm() == 0.0);

  CHECK_THROWS_AS(
      averaged_interaction(spec, basis, {-1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}),
      std::invalid_argument);

  // m conservation under Z-linear driving
  CHECK(commutator_norm(lin, jz_space(basis)) < 1e-12);
}

TEST_CASE("two_color_interaction") {
  RotorSpec spec;
  spec.B = 1.0;
  spec.alpha_par = 1.4;
  spec.alpha_perp = 0.3;
  spec.beta_par = 2.2;
  spec.beta_perp = 0.7;
  auto basis = BasisSet::build(TopClass::Linear, 4);

  // phi = pi/2: odd-parity part exactly zero -> commutes with parity
  Operator h90 = two_color_interaction(spec, basis, 1.1, 0.8, kPi / 2);
  for (int a : basis->parity_block(0))
    for (int b : basis->parity_block(1)) CHECK(abs(h90.mat(a, b)) < 1e-16);

  // e2 = 0: pure alignment, no orientation term
  Operator align_only = two_color_interaction(spec, basis, 1.1, 0.0, 0.0);
  for (int a : basis->parity_block(0))
    for (int b : basis->parity_block(1)) CHECK(abs(align_only.mat(a, b)) == 0.0);

  // phi = 0, beta_perp = 0: odd part is -(e1^2 e2 / 8) beta_par cos^3
  RotorSpec bp = spec;
  bp.beta_perp = 0.0;
  const double e1 = 1.1, e2 = 0.8;
  Operator h0 = two_color_interaction(bp, basis, e1, e2, 0.0);
  Operator even = two_color_interaction(bp, basis, e1, e2, kPi / 2);
  Eigen::MatrixXcd odd_expect =
      (-e1 * e1 * e2 / 8.0 * bp.beta_par) * cos_cubed(basis).mat;
  CHECK((h0.mat - even.mat - odd_expect).norm() < 1e-12);

  CHECK_THROWS_AS(
      two_color_interaction(spec, BasisSet::build(TopClass::ProlateSymmetric, 2),
                            1.0, 1.0, 0.0),
      std::invalid_argument);
}

TEST_CASE("selection meta matches matrix sparsity") {
  auto basis = BasisSet::build(TopClass::ProlateSymmetric, 3);
  Operator cz = direction_cosine(basis, SpaceAxis::Z);
  CHECK(cz.meta.m_diagonal());
  CHECK(cz.meta.max_dj == 1);
  Operator cx = direction_cosine(basis, SpaceAxis::X);
  CHECK(!cx.meta.m_diagonal());
  for (int a = 0; a < basis->dimension(); ++a) {
    for (int b = 0; b < basis->dimension(); ++b) {
      const auto& sa = basis->state_at(a);
      const auto& sb = basis->state_at(b);
      const bool allowed = std::abs(sa.j - sb.j) <= cx.meta.max_dj &&
                           cx.meta.dm.count(sa.m - sb.m) &&
                           cx.meta.dk.count(sa.k - sb.k);
      if (!allowed) CHECK(cx.mat(a, b) == Complex(0.0, 0.0));
    }
  }
}

TEST_CASE("direction cosine selection rules on the Z axis") {
  auto basis = BasisSet::build(TopClass::ProlateSymmetric, 3);
  Operator cz = direction_cosine(basis, SpaceAxis::Z);
  for (int a = 0; a < basis->dimension(); ++a) {
    for (int b = 0; b < basis->dimension(); ++b) {
      const auto& sa = basis->state_at(a);
      const auto& sb = basis->state_at(b);
      if (abs(cz.mat(a, b)) > 1e-15) {
        CHECK(sa.m == sb.m);
        CHECK(sa.k == sb.k);
        const int dj = std::abs(sa.j - sb.j);
        if (dj == 0) {
          // diagonal-in-j elements need both k != 0 and m != 0
          CHECK(sa.k != 0);
          CHECK(sa.m != 0);
        } else {
          CHECK(dj == 1);
        }
      }
    }
  }
}

TEST_CASE("exact decomposition vs truncated matrix product at the basis edge") {
  // squaring the truncated cos(theta) matrix corrupts the top j shells;
  // the rank-decomposed operator stays exact there
  auto basis = BasisSet::build(TopClass::Linear, 6);
  Operator exact = cos_product(basis, SpaceAxis::Z, SpaceAxis::Z);
  Operator cz = direction_cosine(basis, SpaceAxis::Z);
  Eigen::MatrixXcd truncated = cz.mat * cz.mat;

  const int top = basis->index_of(6, 0, 0);
  // the truncated product misses the j_max -> j_max+1 -> j_max path entirely
  const double expected_diag = exact.mat(top, top).real();
  CHECK(std::abs(truncated(top, top).real() - expected_diag) > 1e-3);

  // interior elements agree (the product only breaks at the boundary)
  const int mid = basis->index_of(2, 0, 1);
  CHECK(std::abs(truncated(mid, mid).real() - exact.mat(mid, mid).real()) < 1e-14);

  // and the exact operator matches the quadrature oracle on the edge element
  const Complex oracle = oracle_element(
      basis->state_at(top), basis->state_at(top),
      [](double, double theta, double) {
        return Complex(std::cos(theta) * std::cos(theta), 0.0);
      },
      2);
  CHECK(std::abs(exact.mat(top, top) - oracle) < 1e-10);
}
