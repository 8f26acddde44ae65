#include <doctest.h>

#include "rotorsim/basis.hpp"

using namespace rotorsim;

TEST_CASE("basis dimensions") {
  CHECK(BasisSet::build(TopClass::Linear, 2)->dimension() == 9);
  CHECK(BasisSet::build(TopClass::ProlateSymmetric, 1)->dimension() == 10);
  auto b0 = BasisSet::build(TopClass::Linear, 0);
  CHECK(b0->dimension() == 1);
  CHECK(b0->state_at(0) == RotorKet{0, 0, 0});

  // sum (2j+1)^2 for the general case
  auto ba = BasisSet::build(TopClass::Asymmetric, 3);
  CHECK(ba->dimension() == 1 + 9 + 25 + 49);
}

TEST_CASE("ordering and round trip") {
  auto b = BasisSet::build(TopClass::Asymmetric, 4);
  for (int i = 0; i < b->dimension(); ++i) {
    CHECK(b->index_of(b->state_at(i)) == i);
  }
  // lexicographic (j, k, m), ascending
  for (int i = 1; i < b->dimension(); ++i) {
    const auto& a = b->state_at(i - 1);
    const auto& c = b->state_at(i);
    const bool ordered = std::tuple{a.j, a.k, a.m} < std::tuple{c.j, c.k, c.m};
    CHECK(ordered);
  }
  // every state within bounds
  for (const auto& s : b->states()) {
    CHECK(s.j <= 4);
    CHECK(std::abs(s.k) <= s.j);
    CHECK(std::abs(s.m) <= s.j);
  }
}

TEST_CASE("linear basis forces k = 0") {
  auto b = BasisSet::build(TopClass::Linear, 5);
  for (const auto& s : b->states()) CHECK(s.k == 0);
}

TEST_CASE("m blocks") {
  auto b = BasisSet::build(TopClass::Linear, 2);
  CHECK(b->m_block(0).size() == 3);
  CHECK(b->m_block(2).size() == 1);
  CHECK(b->m_block(3).empty());
  CHECK(b->m_block(-7).empty());

  // union over m covers the basis exactly once
  auto check_cover = [](const BasisSet& basis) {
    std::vector<int> seen(basis.dimension(), 0);
    std::size_t total = 0;
    for (int m = -basis.j_max(); m <= basis.j_max(); ++m) {
      for (int i : basis.m_block(m)) {
        seen[i] += 1;
        ++total;
      }
    }
    CHECK(total == static_cast<std::size_t>(basis.dimension()));
    for (int c : seen) CHECK(c == 1);
  };
  check_cover(*b);
  check_cover(*BasisSet::build(TopClass::OblateSymmetric, 3));
}

TEST_CASE("parity blocks partition the basis") {
  auto b = BasisSet::build(TopClass::Asymmetric, 3);
  CHECK(b->parity_block(0).size() + b->parity_block(1).size() ==
        static_cast<std::size_t>(b->dimension()));
  for (int i : b->parity_block(0)) CHECK(b->state_at(i).j % 2 == 0);
  for (int i : b->parity_block(1)) CHECK(b->state_at(i).j % 2 == 1);
}

TEST_CASE("m_restricted subsets") {
  auto b = BasisSet::build(TopClass::Linear, 4);
  auto sub = b->m_restricted(1);
  CHECK(sub->dimension() == 4);  // j = 1..4
  CHECK(sub->is_restricted());
  for (const auto& s : sub->states()) CHECK(s.m == 1);
  CHECK(sub->index_of(2, 0, 1) == 1);
  CHECK(same_basis(*b, *b));
  CHECK(!same_basis(*b, *sub));
}

TEST_CASE("top class names round trip") {
  for (TopClass t :
       {TopClass::Linear, TopClass::ProlateSymmetric, TopClass::OblateSymmetric,
        TopClass::Spherical, TopClass::Asymmetric}) {
    CHECK(top_class_from_string(to_string(t)) == t);
  }
  CHECK_THROWS_AS(top_class_from_string("banana"), std::invalid_argument);
}

TEST_CASE("negative j_max rejected") {
  CHECK_THROWS_AS(BasisSet::build(TopClass::Linear, -1), std::invalid_argument);
}
