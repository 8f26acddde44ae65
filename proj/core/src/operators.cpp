#include "rotorsim/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "rotorsim/wigner.hpp"

namespace rotorsim {

namespace {

constexpr Complex kI{0.0, 1.0};

int parity_sign(int n) { return (n & 1) ? -1 : 1; }

void prune(std::map<AngularExpansion::Key, Complex>& terms) {
  for (auto it = terms.begin(); it != terms.end();) {
    if (std::abs(it->second) < 1e-15) {
      it = terms.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace

AngularExpansion AngularExpansion::identity() {
  AngularExpansion e;
  e.add_term(0, 0, 0, 1.0);
  return e;
}

AngularExpansion AngularExpansion::direction_cosine(SpaceAxis K) {
  // Rows of the zyz rotation matrix for the body z axis:
  //   cos(theta_zZ) = D^1_{0,0}
  //   cos(theta_zX) = (D^1_{-1,0} - D^1_{1,0}) / sqrt(2)
  //   cos(theta_zY) = -i (D^1_{-1,0} + D^1_{1,0}) / sqrt(2)
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  AngularExpansion e;
  switch (K) {
    case SpaceAxis::Z:
      e.add_term(1, 0, 0, 1.0);
      break;
    case SpaceAxis::X:
      e.add_term(1, -1, 0, inv_sqrt2);
      e.add_term(1, 1, 0, -inv_sqrt2);
      break;
    case SpaceAxis::Y:
      e.add_term(1, -1, 0, -kI * inv_sqrt2);
      e.add_term(1, 1, 0, -kI * inv_sqrt2);
      break;
  }
  return e;
}

void AngularExpansion::add_term(int L, int p, int q, Complex c) {
  terms_[{L, p, q}] += c;
}

AngularExpansion AngularExpansion::operator*(const AngularExpansion& rhs) const {
  // Clebsch-Gordan series:
  // D^{L1}_{p1 q1} D^{L2}_{p2 q2} =
  //   sum_L (2L+1) (L1 L2 L; p1 p2 -P)(L1 L2 L; q1 q2 -Q) (-1)^{P-Q} D^L_{PQ}
  AngularExpansion out;
  for (const auto& [key1, c1] : terms_) {
    const auto [L1, p1, q1] = key1;
    for (const auto& [key2, c2] : rhs.terms_) {
      const auto [L2, p2, q2] = key2;
      const int P = p1 + p2;
      const int Q = q1 + q2;
      const Complex c = c1 * c2;
      for (int L = std::abs(L1 - L2); L <= L1 + L2; ++L) {
        if (std::abs(P) > L || std::abs(Q) > L) continue;
        const double w = (2.0 * L + 1.0) * three_j(L1, L2, L, p1, p2, -P) *
                         three_j(L1, L2, L, q1, q2, -Q) *
                         parity_sign(P - Q);
        if (w != 0.0) out.add_term(L, P, Q, c * w);
      }
    }
  }
  prune(out.terms_);
  return out;
}

AngularExpansion& AngularExpansion::operator+=(const AngularExpansion& rhs) {
  for (const auto& [key, c] : rhs.terms_) terms_[key] += c;
  prune(terms_);
  return *this;
}

AngularExpansion& AngularExpansion::operator*=(Complex scale) {
  for (auto& [key, c] : terms_) c *= scale;
  prune(terms_);
  return *this;
}

Complex AngularExpansion::evaluate(double phi, double theta, double chi) const {
  Complex v = 0.0;
  for (const auto& [key, c] : terms_) {
    const auto [L, p, q] = key;
    v += c * wigner_D(L, p, q, phi, theta, chi);
  }
  return v;
}

Complex AngularExpansion::matrix_element(const RotorKet& bra,
                                         const RotorKet& ket) const {
  // <j'k'm'| D^L_{pq} |jkm> = sqrt((2j+1)(2j'+1)) (-1)^{m-k}
  //     (j' L j; m' p -m) (j' L j; k' q -k)
  Complex v = 0.0;
  const double norm =
      std::sqrt((2.0 * bra.j + 1.0) * (2.0 * ket.j + 1.0)) *
      parity_sign(ket.m - ket.k);
  for (const auto& [key, c] : terms_) {
    const auto [L, p, q] = key;
    if (bra.m + p - ket.m != 0) continue;
    if (bra.k + q - ket.k != 0) continue;
    if (bra.j < std::abs(ket.j - L) || bra.j > ket.j + L) continue;
    v += c * three_j(bra.j, L, ket.j, bra.m, p, -ket.m) *
         three_j(bra.j, L, ket.j, bra.k, q, -ket.k);
  }
  return norm * v;
}

SelectionMeta AngularExpansion::selection_meta() const {
  SelectionMeta meta;
  meta.dm.clear();
  meta.dk.clear();
  for (const auto& [key, c] : terms_) {
    const auto [L, p, q] = key;
    meta.max_dj = std::max(meta.max_dj, L);
    meta.dm.insert(-p);
    meta.dk.insert(-q);
  }
  if (meta.dm.empty()) meta.dm.insert(0);
  if (meta.dk.empty()) meta.dk.insert(0);
  return meta;
}

Operator assemble_operator(std::shared_ptr<const BasisSet> basis,
                           const AngularExpansion& f) {
  if (!basis) throw std::invalid_argument("assemble_operator: null basis");
  const int n = basis->dimension();
  Operator op;
  op.basis = basis;
  op.meta = f.selection_meta();
  op.mat = Eigen::MatrixXcd::Zero(n, n);
  for (int b = 0; b < n; ++b) {
    const RotorKet& ket = basis->state_at(b);
    for (int a = 0; a <= b; ++a) {
      const RotorKet& bra = basis->state_at(a);
      if (std::abs(bra.j - ket.j) > op.meta.max_dj) continue;
      if (!op.meta.dm.count(bra.m - ket.m)) continue;
      if (!op.meta.dk.count(bra.k - ket.k)) continue;
      const Complex v = f.matrix_element(bra, ket);
      op.mat(a, b) = v;
      op.mat(b, a) = std::conj(v);
    }
    op.mat(b, b) = Complex(op.mat(b, b).real(), 0.0);
  }
  return op;
}

Operator free_hamiltonian(const RotorSpec& spec,
                          std::shared_ptr<const BasisSet> basis) {
  if (!basis) throw std::invalid_argument("free_hamiltonian: null basis");
  spec.validate(basis->top());
  const int n = basis->dimension();
  Operator op;
  op.basis = basis;
  op.meta = SelectionMeta{};  // dj = 0, dm = 0
  op.mat = Eigen::MatrixXcd::Zero(n, n);

  const double A = spec.A, B = spec.B, C = spec.C;
  switch (basis->top()) {
    case TopClass::Linear: {
      const double D = spec.centrifugal_D.value_or(0.0);
      for (int i = 0; i < n; ++i) {
        const double jj = basis->state_at(i).j * (basis->state_at(i).j + 1.0);
        op.mat(i, i) = B * jj - D * jj * jj;
      }
      return op;
    }
    case TopClass::ProlateSymmetric:
      for (int i = 0; i < n; ++i) {
        const RotorKet& s = basis->state_at(i);
        op.mat(i, i) = A * s.j * (s.j + 1.0) + (C - A) * s.k * s.k;
      }
      return op;
    case TopClass::OblateSymmetric:
      for (int i = 0; i < n; ++i) {
        const RotorKet& s = basis->state_at(i);
        op.mat(i, i) = C * s.j * (s.j + 1.0) + (A - C) * s.k * s.k;
      }
      return op;
    case TopClass::Spherical:
      for (int i = 0; i < n; ++i) {
        const RotorKet& s = basis->state_at(i);
        op.mat(i, i) = B * s.j * (s.j + 1.0);
      }
      return op;
    case TopClass::Asymmetric: {
      // H = (A+B)/2 (J^2 - Jz^2) + C Jz^2 + (A-B)/4 (Jp^2 + Jm^2) in the
      // body frame; the ladder terms couple k <-> k+2 within each (j,m).
      op.meta.dk = {-2, 0, 2};
      for (int b = 0; b < n; ++b) {
        const RotorKet& s = basis->state_at(b);
        const double jj = s.j * (s.j + 1.0);
        op.mat(b, b) = 0.5 * (A + B) * (jj - s.k * s.k) + C * s.k * s.k;
        const int a = basis->index_of(s.j, s.k + 2, s.m);
        if (a >= 0) {
          const double f = 0.25 * (A - B) *
                           std::sqrt((jj - s.k * (s.k + 1.0)) *
                                     (jj - (s.k + 1.0) * (s.k + 2.0)));
          op.mat(a, b) = f;
          op.mat(b, a) = f;
        }
      }
      return op;
    }
  }
  throw std::logic_error("free_hamiltonian: unreachable");
}

Operator j_squared(std::shared_ptr<const BasisSet> basis) {
  const int n = basis->dimension();
  Operator op;
  op.basis = basis;
  op.mat = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const RotorKet& s = basis->state_at(i);
    op.mat(i, i) = s.j * (s.j + 1.0);
  }
  return op;
}

Operator jz_space(std::shared_ptr<const BasisSet> basis) {
  const int n = basis->dimension();
  Operator op;
  op.basis = basis;
  op.mat = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) op.mat(i, i) = basis->state_at(i).m;
  return op;
}

Operator direction_cosine(std::shared_ptr<const BasisSet> basis, SpaceAxis K) {
  return assemble_operator(std::move(basis),
                           AngularExpansion::direction_cosine(K));
}

Operator cos_product(std::shared_ptr<const BasisSet> basis, SpaceAxis K,
                     SpaceAxis Kp) {
  const AngularExpansion f = AngularExpansion::direction_cosine(K) *
                             AngularExpansion::direction_cosine(Kp);
  return assemble_operator(std::move(basis), f);
}

Operator cos_cubed(std::shared_ptr<const BasisSet> basis) {
  if (basis->top() == TopClass::Asymmetric) {
    throw std::invalid_argument(
        "cos_cubed: defined for linear and symmetric tops only");
  }
  const AngularExpansion cz = AngularExpansion::direction_cosine(SpaceAxis::Z);
  return assemble_operator(std::move(basis), cz * cz * cz);
}

namespace {

const std::array<SpaceAxis, 3> kAxes{SpaceAxis::X, SpaceAxis::Y, SpaceAxis::Z};

}  // namespace

Operator resonant_interaction(const RotorSpec& spec,
                              std::shared_ptr<const BasisSet> basis,
                              const std::array<double, 3>& field,
                              const InteractionOptions& opts) {
  AngularExpansion h;
  const double da = spec.delta_alpha();
  for (SpaceAxis K : kAxes) {
    const double e = field[static_cast<int>(K)];
    if (e == 0.0) continue;
    h += (-spec.mu0 * e) * AngularExpansion::direction_cosine(K);
    AngularExpansion sq = AngularExpansion::direction_cosine(K) *
                          AngularExpansion::direction_cosine(K);
    h += (-0.5 * e * e * da) * sq;
    if (opts.keep_isotropic_shift) {
      h += (-0.5 * e * e * spec.alpha_perp) * AngularExpansion::identity();
    }
  }
  for (SpaceAxis K : kAxes) {
    for (SpaceAxis Kp : kAxes) {
      if (K == Kp) continue;
      const double e = field[static_cast<int>(K)];
      const double ep = field[static_cast<int>(Kp)];
      if (e == 0.0 || ep == 0.0) continue;
      h += (-e * ep * da) * (AngularExpansion::direction_cosine(K) *
                             AngularExpansion::direction_cosine(Kp));
    }
  }
  return assemble_operator(std::move(basis), h);
}

Operator averaged_interaction(const RotorSpec& spec,
                              std::shared_ptr<const BasisSet> basis,
                              const std::array<double, 3>& amplitudes,
                              const std::array<double, 3>& phases,
                              const InteractionOptions& opts) {
  for (double a : amplitudes) {
    if (a < 0.0) {
      throw std::invalid_argument(
          "averaged_interaction: envelope amplitudes must be >= 0");
    }
  }
  AngularExpansion h;
  const double da = spec.delta_alpha();
  for (SpaceAxis K : kAxes) {
    const double a = amplitudes[static_cast<int>(K)];
    if (a == 0.0) continue;
    AngularExpansion sq = AngularExpansion::direction_cosine(K) *
                          AngularExpansion::direction_cosine(K);
    h += (-0.25 * a * a * da) * sq;
    if (opts.keep_isotropic_shift) {
      h += (-0.25 * a * a * spec.alpha_perp) * AngularExpansion::identity();
    }
  }
  for (SpaceAxis K : kAxes) {
    for (SpaceAxis Kp : kAxes) {
      if (K == Kp) continue;
      const double a = amplitudes[static_cast<int>(K)];
      const double ap = amplitudes[static_cast<int>(Kp)];
      if (a == 0.0 || ap == 0.0) continue;
      const double rel =
          phases[static_cast<int>(K)] - phases[static_cast<int>(Kp)];
      h += (-0.5 * a * ap * std::cos(rel) * da) *
           (AngularExpansion::direction_cosine(K) *
            AngularExpansion::direction_cosine(Kp));
    }
  }
  return assemble_operator(std::move(basis), h);
}

Operator two_color_interaction(const RotorSpec& spec,
                               std::shared_ptr<const BasisSet> basis,
                               double e1, double e2, double phi,
                               const InteractionOptions& opts) {
  if (basis->top() != TopClass::Linear) {
    throw std::invalid_argument(
        "two_color_interaction: linear molecules only");
  }
  if (e1 < 0.0 || e2 < 0.0) {
    throw std::invalid_argument(
        "two_color_interaction: envelopes must be >= 0");
  }
  const AngularExpansion cz = AngularExpansion::direction_cosine(SpaceAxis::Z);
  AngularExpansion h;
  const double sum_sq = e1 * e1 + e2 * e2;
  h += (-0.25 * spec.delta_alpha() * sum_sq) * (cz * cz);
  if (opts.keep_isotropic_shift) {
    h += (-0.25 * spec.alpha_perp * sum_sq) * AngularExpansion::identity();
  }
  const double odd = -0.125 * std::cos(phi) * e1 * e1 * e2;
  h += (odd * (spec.beta_par - 3.0 * spec.beta_perp)) * (cz * cz * cz);
  h += (odd * 3.0 * spec.beta_perp) * cz;
  return assemble_operator(std::move(basis), h);
}

Operator operator+(const Operator& a, const Operator& b) {
  if (!same_basis(*a.basis, *b.basis)) {
    throw std::invalid_argument("Operator+: basis mismatch");
  }
  Operator out = a;
  out.mat += b.mat;
  out.meta.max_dj = std::max(a.meta.max_dj, b.meta.max_dj);
  out.meta.dm.insert(b.meta.dm.begin(), b.meta.dm.end());
  out.meta.dk.insert(b.meta.dk.begin(), b.meta.dk.end());
  return out;
}

Operator operator*(double scale, Operator op) {
  op.mat *= scale;
  return op;
}

double commutator_norm(const Operator& a, const Operator& b) {
  return (a.mat * b.mat - b.mat * a.mat).norm();
}

}  // namespace rotorsim
