#include "rotorsim/observables.hpp"

#include <cmath>
#include <stdexcept>

#include "rotorsim/constants.hpp"
#include "rotorsim/quadrature.hpp"
#include "rotorsim/wigner.hpp"

namespace rotorsim {

double expectation(const Operator& op, const QuantumState& state) {
  if (!same_basis(*op.basis, *state.basis())) {
    throw std::invalid_argument("expectation: operator/state basis mismatch");
  }
  if (state.is_pure()) {
    const Eigen::VectorXcd& psi = state.vector();
    return (psi.adjoint() * op.mat * psi)(0, 0).real();
  }
  return (op.mat * state.density()).trace().real();
}

bool AlignmentRecord::planar(double threshold) const {
  return std::min({cos2_x, cos2_y, cos2_z}) <= threshold;
}

bool AlignmentRecord::oriented(double threshold) const {
  return std::max({std::abs(cos_x), std::abs(cos_y), std::abs(cos_z)}) >=
         threshold;
}

ObservableSet ObservableSet::build(const RotorSpec& spec,
                                   std::shared_ptr<const BasisSet> basis) {
  ObservableSet s{
      direction_cosine(basis, SpaceAxis::X),
      direction_cosine(basis, SpaceAxis::Y),
      direction_cosine(basis, SpaceAxis::Z),
      cos_product(basis, SpaceAxis::X, SpaceAxis::X),
      cos_product(basis, SpaceAxis::Y, SpaceAxis::Y),
      cos_product(basis, SpaceAxis::Z, SpaceAxis::Z),
      free_hamiltonian(spec, basis),
      j_squared(basis),
  };
  return s;
}

AlignmentRecord alignment_record(const QuantumState& state,
                                 const ObservableSet& obs) {
  AlignmentRecord r;
  r.cos_x = expectation(obs.cos_x, state);
  r.cos_y = expectation(obs.cos_y, state);
  r.cos_z = expectation(obs.cos_z, state);
  r.cos2_x = expectation(obs.cos2_x, state);
  r.cos2_y = expectation(obs.cos2_y, state);
  r.cos2_z = expectation(obs.cos2_z, state);
  r.energy = expectation(obs.h0, state);
  r.j2 = expectation(obs.j2, state);
  return r;
}

AlignmentRecord alignment_record(const QuantumState& state,
                                 const RotorSpec& spec,
                                 std::shared_ptr<const BasisSet> basis) {
  return alignment_record(state, ObservableSet::build(spec, std::move(basis)));
}

AngularDistribution angular_distribution(const QuantumState& state,
                                         int theta_count, int phi_count) {
  const BasisSet& basis = *state.basis();
  if (basis.top() != TopClass::Linear) {
    throw std::invalid_argument(
        "angular_distribution: linear-molecule states only");
  }
  if (theta_count < 2 || phi_count < 2) {
    throw std::invalid_argument("angular_distribution: grid too small");
  }

  AngularDistribution out;
  out.theta.resize(theta_count);
  out.phi.resize(phi_count);
  // midpoint grids; the box quadrature below checks normalization
  const double dth = kPi / theta_count;
  const double dph = kTwoPi / phi_count;
  for (int i = 0; i < theta_count; ++i) out.theta[i] = (i + 0.5) * dth;
  for (int i = 0; i < phi_count; ++i) out.phi[i] = (i + 0.5) * dph;

  const int n = basis.dimension();
  // spherical-harmonic values Y_{jm}(theta, phi) per basis state
  Eigen::MatrixXcd rho = state.to_density();
  out.density.resize(theta_count, phi_count);

  std::vector<double> dval(n);
  for (int it = 0; it < theta_count; ++it) {
    for (int i = 0; i < n; ++i) {
      const RotorKet& s = basis.state_at(i);
      dval[i] = std::sqrt((2.0 * s.j + 1.0) / (4.0 * kPi)) *
                wigner_small_d(s.j, s.m, 0, out.theta[it]);
    }
    for (int ip = 0; ip < phi_count; ++ip) {
      Eigen::VectorXcd y(n);
      for (int i = 0; i < n; ++i) {
        y[i] = dval[i] * std::polar(1.0, basis.state_at(i).m * out.phi[ip]);
      }
      out.density(it, ip) = std::max((y.adjoint() * rho * y)(0, 0).real(),
                                     -1e-30);
    }
  }

  // normalization verified on an internal band-exact rule (Gauss-Legendre in
  // theta, uniform in phi), independent of the requested output grid
  const int band = 2 * basis.j_max();
  const GaussLegendreRule gl = gauss_legendre(band + 4);
  const int nphi = band + 3;
  double norm = 0.0;
  for (std::size_t ig = 0; ig < gl.nodes.size(); ++ig) {
    const double th = std::acos(gl.nodes[ig]);
    for (int i = 0; i < n; ++i) {
      const RotorKet& s = basis.state_at(i);
      dval[i] = std::sqrt((2.0 * s.j + 1.0) / (4.0 * kPi)) *
                wigner_small_d(s.j, s.m, 0, th);
    }
    for (int ip = 0; ip < nphi; ++ip) {
      const double ph = kTwoPi * ip / nphi;
      Eigen::VectorXcd y(n);
      for (int i = 0; i < n; ++i) {
        y[i] = dval[i] * std::polar(1.0, basis.state_at(i).m * ph);
      }
      norm += gl.weights[ig] * (y.adjoint() * rho * y)(0, 0).real();
    }
  }
  out.quadrature_norm = norm * kTwoPi / nphi;
  return out;
}

std::vector<Feature> detect_features(const Trajectory& traj,
                                     const std::string& column,
                                     double prominence_rel) {
  return detect_features(traj.times, traj.column(column), prominence_rel);
}

std::vector<Feature> detect_features(const std::vector<double>& times,
                                     const std::vector<double>& signal,
                                     double prominence_rel) {
  std::vector<Feature> out;
  const std::size_t n = signal.size();
  if (n < 3 || times.size() != n) return out;

  double lo = signal[0], hi = signal[0];
  for (double v : signal) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  if (span <= 0.0) return out;  // constant signal
  const double prominence = prominence_rel * span;

  // candidate local extrema (plateaus take their midpoint)
  struct Cand {
    std::size_t idx;
    bool peak;
  };
  std::vector<Cand> cands;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (signal[i] > signal[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && signal[j + 1] == signal[j]) ++j;
      if (j + 1 < n && signal[j + 1] < signal[j]) {
        cands.push_back({(i + j) / 2, true});
      }
      i = j + 1;
    } else if (signal[i] < signal[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && signal[j + 1] == signal[j]) ++j;
      if (j + 1 < n && signal[j + 1] > signal[j]) {
        cands.push_back({(i + j) / 2, false});
      }
      i = j + 1;
    } else {
      ++i;
    }
  }

  // prominence: rise/fall to the lowest/highest level between this extremum
  // and the nearest higher peak (lower trough) on each side
  for (const Cand& c : cands) {
    const double v = signal[c.idx];
    double left_base = v, right_base = v;
    for (std::size_t j = c.idx; j-- > 0;) {
      if (c.peak ? signal[j] > v : signal[j] < v) break;
      left_base = c.peak ? std::min(left_base, signal[j])
                         : std::max(left_base, signal[j]);
    }
    for (std::size_t j = c.idx + 1; j < n; ++j) {
      if (c.peak ? signal[j] > v : signal[j] < v) break;
      right_base = c.peak ? std::min(right_base, signal[j])
                          : std::max(right_base, signal[j]);
    }
    const double prom = c.peak ? v - std::max(left_base, right_base)
                               : std::min(left_base, right_base) - v;
    if (prom >= prominence) {
      out.push_back({times[c.idx], v,
                     c.peak ? Feature::Kind::Peak : Feature::Kind::Trough});
    }
  }
  return out;
}

}  // namespace rotorsim
