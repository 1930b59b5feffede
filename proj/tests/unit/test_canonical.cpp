#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "mose/canonical.hpp"
#include "mose/error.hpp"

using namespace mose;

TEST(AllGraphs, CountsMatchTheKnownSequence) {
  // Non-isomorphic simple graphs on n nodes: 1, 2, 4, 11, 34, 156.
  const std::vector<std::size_t> expected{1, 2, 4, 11, 34, 156};
  for (NodeId n = 1; n <= 6; ++n) EXPECT_EQ(all_graphs(n).size(), expected[n - 1]) << "n=" << n;
}

TEST(AllGraphs, PairwiseNonIsomorphic) {
  std::set<std::string> codes;
  for (const auto& g : all_graphs(5)) codes.insert(canonical_form(g));
  EXPECT_EQ(codes.size(), 34u);
}

TEST(CanonicalForm, InvariantUnderRelabeling) {
  std::mt19937_64 rng(5);
  for (const auto& g : all_graphs(6)) {
    std::vector<NodeId> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ASSERT_EQ(canonical_form(g), canonical_form(g.relabeled(perm)));
  }
}

TEST(CanonicalForm, ColorsAndRootMatter) {
  const Graph p3 = shapes::path(3);
  EXPECT_NE(canonical_form(p3, {}, NodeId{0}), canonical_form(p3, {}, NodeId{1}));
  EXPECT_EQ(canonical_form(p3, {}, NodeId{0}), canonical_form(p3, {}, NodeId{2}));
  const std::vector<int> a{0, 1, 0}, b{1, 0, 0};
  EXPECT_NE(canonical_form(p3, a), canonical_form(p3, b));
}

TEST(Isomorphic, ClassicPairs) {
  EXPECT_FALSE(isomorphic(shapes::cycle(6), shapes::disjoint_union(shapes::cycle(3), shapes::cycle(3))));
  EXPECT_TRUE(isomorphic(shapes::path(4), shapes::path(4).relabeled(std::vector<NodeId>{3, 1, 0, 2})));
}
