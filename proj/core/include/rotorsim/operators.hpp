#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <map>
#include <memory>
#include <set>

#include "rotorsim/basis.hpp"
#include "rotorsim/rotor_spec.hpp"

namespace rotorsim {

using Complex = std::complex<double>;

enum class SpaceAxis { X = 0, Y = 1, Z = 2 };

// Allowed couplings of an operator in the |j,k,m> basis, derived from its
// D-function content: |j'-j| <= max_dj, and (m'-m, k'-k) drawn from the
// listed sets.
struct SelectionMeta {
  int max_dj = 0;
  std::set<int> dm{0};
  std::set<int> dk{0};
  bool m_diagonal() const { return dm.size() == 1 && *dm.begin() == 0; }
};

// Angular function expanded over rotation matrix elements,
// f = sum c_{Lpq} D^L_{pq}(phi, theta, chi). Closed under products via the
// Clebsch-Gordan series, which keeps matrix elements exact at every j
// instead of accumulating truncation error from products of finite
// matrices.
class AngularExpansion {
 public:
  using Key = std::tuple<int, int, int>;  // (L, p, q)

  static AngularExpansion identity();
  static AngularExpansion direction_cosine(SpaceAxis K);  // cos(theta_zK)

  AngularExpansion operator*(const AngularExpansion& rhs) const;
  AngularExpansion& operator+=(const AngularExpansion& rhs);
  AngularExpansion& operator*=(Complex scale);
  friend AngularExpansion operator*(Complex scale, AngularExpansion e) {
    e *= scale;
    return e;
  }

  const std::map<Key, Complex>& terms() const { return terms_; }
  void add_term(int L, int p, int q, Complex c);

  // Pointwise value, for oracle comparisons.
  Complex evaluate(double phi, double theta, double chi) const;

  // <j'k'm'| f |jkm> with basis functions sqrt((2j+1)/(8 pi^2)) D^{j*}_{mk}.
  Complex matrix_element(const RotorKet& bra, const RotorKet& ket) const;

  SelectionMeta selection_meta() const;

 private:
  std::map<Key, Complex> terms_;
};

// Hermitian matrix over a basis.  Hermiticity holds exactly by
// construction: the upper triangle is computed, the lower mirrored.
struct Operator {
  std::shared_ptr<const BasisSet> basis;
  Eigen::MatrixXcd mat;
  SelectionMeta meta;

  int dim() const { return static_cast<int>(mat.rows()); }
};

Operator assemble_operator(std::shared_ptr<const BasisSet> basis,
                           const AngularExpansion& f);

// --- free rotor -----------------------------------------------------------

// Diagonal closed forms for linear/symmetric/spherical tops; for asymmetric
// tops, (j,m) blocks coupling k <-> k+-2 assembled from the body-frame
// angular momentum algebra (quantization axis carries the constant C).
Operator free_hamiltonian(const RotorSpec& spec,
                          std::shared_ptr<const BasisSet> basis);

Operator j_squared(std::shared_ptr<const BasisSet> basis);   // diagonal j(j+1)
Operator jz_space(std::shared_ptr<const BasisSet> basis);    // diagonal m

// --- direction cosines and powers ----------------------------------------

Operator direction_cosine(std::shared_ptr<const BasisSet> basis, SpaceAxis K);
Operator cos_product(std::shared_ptr<const BasisSet> basis, SpaceAxis K,
                     SpaceAxis Kp);
// cos^3(theta_zZ); linear or symmetric tops only.
Operator cos_cubed(std::shared_ptr<const BasisSet> basis);

// --- field interactions ----------------------------------------------------

struct InteractionOptions {
  // Keep the isotropic alpha_perp (and 3 beta_perp) identity contributions;
  // they shift energies only.
  bool keep_isotropic_shift = true;
};

// Instantaneous field (THz / resonant driving, no carrier averaging):
//   -sum_K mu0 E_K cos(theta_zK)
//   -sum_K (E_K^2/2) (dalpha cos^2(theta_zK) + alpha_perp)
//   -sum_{K!=K'} E_K E_K' dalpha cos(theta_zK) cos(theta_zK')
Operator resonant_interaction(const RotorSpec& spec,
                              std::shared_ptr<const BasisSet> basis,
                              const std::array<double, 3>& field,
                              const InteractionOptions& opts = {});

// Carrier-averaged envelope form:
//   -(1/4) sum_K amp_K^2 (dalpha cos^2(theta_zK) + alpha_perp)
//   -(1/2) sum_{K!=K'} amp_K amp_K' cos(phase_K - phase_K')
//          dalpha cos(theta_zK) cos(theta_zK')
Operator averaged_interaction(const RotorSpec& spec,
                              std::shared_ptr<const BasisSet> basis,
                              const std::array<double, 3>& amplitudes,
                              const std::array<double, 3>& phases,
                              const InteractionOptions& opts = {});

// Averaged two-color field along Z on a linear molecule:
//   -(1/4)(dalpha cos^2 + alpha_perp)(e1^2 + e2^2)
//   -(cos(phi)/8)[(beta_par - 3 beta_perp) cos^3 + 3 beta_perp cos] e1^2 e2
Operator two_color_interaction(const RotorSpec& spec,
                               std::shared_ptr<const BasisSet> basis,
                               double e1, double e2, double phi,
                               const InteractionOptions& opts = {});

// --- helpers ----------------------------------------------------------------

Operator operator+(const Operator& a, const Operator& b);
Operator operator*(double scale, Operator op);
double commutator_norm(const Operator& a, const Operator& b);

}  // namespace rotorsim
