#include "rotorsim/basis.hpp"

#include <stdexcept>
#include <tuple>

namespace rotorsim {

std::string to_string(TopClass top) {
  switch (top) {
    case TopClass::Linear: return "linear";
    case TopClass::ProlateSymmetric: return "prolate";
    case TopClass::OblateSymmetric: return "oblate";
    case TopClass::Spherical: return "spherical";
    case TopClass::Asymmetric: return "asymmetric";
  }
  return "unknown";
}

TopClass top_class_from_string(const std::string& name) {
  if (name == "linear") return TopClass::Linear;
  if (name == "prolate") return TopClass::ProlateSymmetric;
  if (name == "oblate") return TopClass::OblateSymmetric;
  if (name == "spherical") return TopClass::Spherical;
  if (name == "asymmetric") return TopClass::Asymmetric;
  throw std::invalid_argument("unknown top class: '" + name + "'");
}

std::shared_ptr<const BasisSet> BasisSet::build(TopClass top, int j_max) {
  if (j_max < 0) throw std::invalid_argument("build_basis: j_max must be >= 0");
  auto basis = std::shared_ptr<BasisSet>(new BasisSet());
  basis->top_ = top;
  basis->j_max_ = j_max;
  const bool linear = (top == TopClass::Linear);
  for (int j = 0; j <= j_max; ++j) {
    const int k_lo = linear ? 0 : -j;
    const int k_hi = linear ? 0 : j;
    for (int k = k_lo; k <= k_hi; ++k) {
      for (int m = -j; m <= j; ++m) {
        basis->states_.push_back({j, k, m});
      }
    }
  }
  basis->finalize();
  return basis;
}

void BasisSet::finalize() {
  for (int i = 0; i < dimension(); ++i) {
    const RotorKet& s = states_[i];
    index_[{s.j, s.k, s.m}] = i;
    m_blocks_[s.m].push_back(i);
    parity_blocks_[s.j & 1].push_back(i);
  }
}

int BasisSet::index_of(const RotorKet& s) const {
  auto it = index_.find({s.j, s.k, s.m});
  return it == index_.end() ? -1 : it->second;
}

const std::vector<int>& BasisSet::m_block(int m) const {
  auto it = m_blocks_.find(m);
  return it == m_blocks_.end() ? empty_ : it->second;
}

const std::vector<int>& BasisSet::parity_block(int parity) const {
  if (parity != 0 && parity != 1) {
    throw std::invalid_argument("parity_block: parity must be 0 or 1");
  }
  return parity_blocks_[parity];
}

std::vector<int> BasisSet::m_values() const {
  std::vector<int> out;
  out.reserve(m_blocks_.size());
  for (const auto& [m, idx] : m_blocks_) out.push_back(m);
  return out;
}

std::shared_ptr<const BasisSet> BasisSet::m_restricted(int m) const {
  auto basis = std::shared_ptr<BasisSet>(new BasisSet());
  basis->top_ = top_;
  basis->j_max_ = j_max_;
  basis->restricted_ = true;
  for (int i : m_block(m)) basis->states_.push_back(states_[i]);
  basis->finalize();
  return basis;
}

bool same_basis(const BasisSet& a, const BasisSet& b) {
  if (&a == &b) return true;
  return a.top() == b.top() && a.j_max() == b.j_max() &&
         a.states() == b.states();
}

}  // namespace rotorsim
