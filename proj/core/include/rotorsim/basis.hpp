#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rotorsim {

enum class TopClass {
  Linear,
  ProlateSymmetric,
  OblateSymmetric,
  Spherical,
  Asymmetric,
};

std::string to_string(TopClass top);
TopClass top_class_from_string(const std::string& name);

struct RotorKet {
  int j, k, m;
  bool operator==(const RotorKet&) const = default;
};

// Truncated |j,k,m> basis. Canonical sets (from build()) hold every state
// with j <= j_max, ordered lexicographically by (j, k, m) so that operator
// matrices are bit-for-bit reproducible; linear tops carry k = 0 only.
//
// The canonical ordering interleaves m values, so an m-block is a
// deterministic ascending index list, not a contiguous range. Restricted
// sets (m_restricted) keep the parent ordering.
class BasisSet {
 public:
  static std::shared_ptr<const BasisSet> build(TopClass top, int j_max);

  TopClass top() const { return top_; }
  int j_max() const { return j_max_; }
  int dimension() const { return static_cast<int>(states_.size()); }
  const RotorKet& state_at(int i) const { return states_.at(i); }
  const std::vector<RotorKet>& states() const { return states_; }

  // Index of a ket in this set, or -1 if absent.
  int index_of(const RotorKet& s) const;
  int index_of(int j, int k, int m) const { return index_of({j, k, m}); }

  // Ascending indices of all states with the given m (empty when |m| > j_max).
  const std::vector<int>& m_block(int m) const;
  // Ascending indices of all states with even (parity = 0) or odd j.
  const std::vector<int>& parity_block(int parity) const;
  std::vector<int> m_values() const;

  // Same top/j_max, states restricted to a single m. Used for propagation
  // under m-conserving interactions.
  std::shared_ptr<const BasisSet> m_restricted(int m) const;
  bool is_restricted() const { return restricted_; }

 private:
  BasisSet() = default;
  void finalize();

  TopClass top_ = TopClass::Linear;
  int j_max_ = 0;
  bool restricted_ = false;
  std::vector<RotorKet> states_;
  std::map<int, std::vector<int>> m_blocks_;
  std::vector<int> parity_blocks_[2];
  std::map<std::tuple<int, int, int>, int> index_;
  std::vector<int> empty_;
};

bool same_basis(const BasisSet& a, const BasisSet& b);

}  // namespace rotorsim
