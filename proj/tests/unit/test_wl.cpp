#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "mose/canonical.hpp"
#include "mose/error.hpp"
#include "mose/wl.hpp"

using namespace mose;

namespace {

const Graph c6 = shapes::cycle(6);
const Graph two_triangles = shapes::disjoint_union(shapes::cycle(3), shapes::cycle(3));

ModelConfig probe_config(int feature_dim) {
  ModelConfig c;
  c.feature_dim = feature_dim;
  c.kernel.max_step = 3;
  return c;
}

}  // namespace

TEST(Wl1, Examples) {
  EXPECT_EQ(wl1_refine(shapes::star(3)).class_count(), 2);
  EXPECT_EQ(wl1_refine(shapes::path(4)).class_count(), 2);
  const Coloring reg = wl1_refine(c6);
  EXPECT_EQ(reg.class_count(), 1);
  EXPECT_LE(reg.rounds, 1);
  EXPECT_EQ(wl1_refine(shapes::complete(5)).class_count(), 1);
}

TEST(Wl1, InitialColorsAreRespected) {
  const std::vector<int> init{0, 1, 0, 0, 0, 0};
  EXPECT_GT(wl1_refine(c6, &init).class_count(), 1);
}

TEST(Wl1, RelabelingKeepsHistogram) {
  std::mt19937_64 rng(2);
  for (const auto& g : all_graphs(5)) {
    std::vector<NodeId> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::vector<Graph> pair{g, g.relabeled(perm)};
    const auto c = wl1_refine(pair);
    ASSERT_EQ(c[0].histogram, c[1].histogram);
  }
}

TEST(Swl, SeparatesTwoTrianglesFromHexagon) {
  EXPECT_TRUE(distinguish(c6, two_triangles, Refiner::swl, SwlPolicy::ego(1)));
  EXPECT_FALSE(distinguish(c6, two_triangles, Refiner::wl1));
  EXPECT_EQ(swl_refine(c6, SwlPolicy::ego(1)).class_count(), 1);
  EXPECT_FALSE(distinguish(c6, c6.relabeled(std::vector<NodeId>{3, 1, 5, 0, 2, 4}), Refiner::swl));
}

TEST(Swl, AnonymousWalkPolicyIsDeterministic) {
  const SwlPolicy p = SwlPolicy::anonymous(3, 4);
  EXPECT_EQ(p.subgraphs(c6), p.subgraphs(c6));
  EXPECT_TRUE(distinguish(c6, two_triangles, Refiner::swl, p));
}

TEST(Swl, OversizedSubgraphIsResourceError) {
  EXPECT_THROW(swl_refine(shapes::star(9), SwlPolicy::ego(1)), ResourceError);
}

TEST(Swl, SupersetOfWl1OnFiveNodeGraphs) {
  const auto graphs = all_graphs(5);
  const auto wl = wl1_refine(graphs);
  const auto swl = swl_refine(graphs, SwlPolicy::ego(1));
  for (const auto& p : equal_size_pairs(graphs)) {
    const bool a = wl[p.first].histogram != wl[p.second].histogram;
    const bool b = swl[p.first].histogram != swl[p.second].histogram;
    ASSERT_TRUE(!a || b) << p.first << " vs " << p.second;
  }
}

TEST(Lemma1, Examples) {
  EXPECT_TRUE(lemma1_check(c6, SwlPolicy::ego(1)));
  EXPECT_TRUE(lemma1_check(shapes::path(4), SwlPolicy::ego(1)));
  EXPECT_TRUE(lemma1_check(shapes::star(3), SwlPolicy::ego(1)));
  for (const auto& g : all_graphs(5)) ASSERT_TRUE(lemma1_check(g, SwlPolicy::ego(1)));
}

TEST(MoseDistinguish, IsomorphicPairsAreNeverSeparated) {
  const MoseModel model(probe_config(5), 1);
  std::mt19937_64 rng(3);
  for (const auto& g : all_graphs(5)) {
    std::vector<NodeId> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ASSERT_FALSE(mose_distinguish(g, g.relabeled(perm), model, SwlPolicy::ego(1)));
  }
}

TEST(MoseDistinguish, HexagonVersusTwoTriangles) {
  int separated = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    separated += mose_distinguish(c6, two_triangles, MoseModel(probe_config(5), seed), SwlPolicy::ego(1));
  EXPECT_GE(separated, 99);
}

TEST(PairReport, OneRowPerPair) {
  const auto graphs = all_graphs(4);
  auto pairs = equal_size_pairs(graphs);
  EXPECT_EQ(pairs.size(), 11u * 10u / 2u);
  std::ostringstream out;
  write_pair_report(out, graphs, pairs);
  const std::string s = out.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), pairs.size() + 1);
  EXPECT_EQ(s.rfind("pair_id,first,second,nodes,wl1_distinguished", 0), 0u);
}
