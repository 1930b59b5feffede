#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "mose/canonical.hpp"
#include "mose/error.hpp"
#include "mose/walks.hpp"

using namespace mose;

namespace {

WalkConfig walks(int l, int n) {
  WalkConfig w;
  w.walk_length = l;
  w.walks_per_node = n;
  return w;
}

}  // namespace

TEST(SampleWalks, IsolatedNodeHasNoWalks) {
  Rng rng(1);
  EXPECT_TRUE(sample_walks(shapes::empty(3), 1, walks(3, 5), rng).empty());
}

TEST(SampleWalks, ForcedPath) {
  Rng rng(1);
  for (const auto& w : sample_walks(shapes::path(2), 0, walks(3, 10), rng))
    EXPECT_EQ(w, (RandomWalk{0, 1, 0, 1}));
}

TEST(SampleWalks, TriangleTwoStepWalksAreUniform) {
  Rng rng(7);
  std::map<RandomWalk, int> freq;
  for (const auto& w : sample_walks(shapes::cycle(3), 0, walks(2, 1000), rng)) ++freq[w];
  ASSERT_EQ(freq.size(), 4u);
  double chi2 = 0.0;
  for (const auto& [w, c] : freq) {
    EXPECT_NEAR(c / 1000.0, 0.25, 0.05);
    chi2 += (c - 250.0) * (c - 250.0) / 250.0;
  }
  EXPECT_LT(chi2, 16.27);  // 3 dof, p = 0.001
}

TEST(SampleWalks, ConsecutiveNodesAreAdjacent) {
  Rng rng(3);
  const Graph g = shapes::disjoint_union(shapes::cycle(5), shapes::star(4));
  for (NodeId v = 0; v < g.node_count(); ++v)
    for (const auto& w : sample_walks(g, v, walks(6, 5), rng)) {
      ASSERT_EQ(w.size(), 7u);
      ASSERT_EQ(w.front(), v);
      for (std::size_t i = 1; i < w.size(); ++i) ASSERT_TRUE(g.has_edge(w[i - 1], w[i]));
    }
}

TEST(ToAnonymous, Examples) {
  const std::vector<NodeId> a{11, 12, 11, 13}, b{4, 2, 9, 4};
  EXPECT_EQ(to_anonymous(a), (AnonymousWalk{0, 1, 0, 2}));
  EXPECT_EQ(to_anonymous(b), (AnonymousWalk{0, 1, 2, 0}));
  EXPECT_TRUE(is_valid_pattern(AnonymousWalk{0, 1, 0, 2}));
  EXPECT_FALSE(is_valid_pattern(AnonymousWalk{0, 2}));
  EXPECT_FALSE(is_valid_pattern(AnonymousWalk{1, 0}));
}

TEST(TopPatterns, TieBreakAndBudget) {
  PatternCounts c{{{0, 1, 0}, 5}, {{0, 1, 2}, 5}, {{0, 1, 0, 1}, 3}};
  EXPECT_EQ(top_patterns(c, 2), (std::vector<AnonymousWalk>{{0, 1, 0}, {0, 1, 2}}));
  EXPECT_EQ(top_patterns(c, 10).size(), 3u);
  PatternCounts d{{{0, 1, 2}, 9}, {{0, 1, 0}, 1}};
  EXPECT_EQ(top_patterns(d, 1), (std::vector<AnonymousWalk>{{0, 1, 2}}));
}

TEST(ExtractSubgraph, Examples) {
  const Graph p2 = shapes::path(2);
  const std::vector<RandomWalk> none;
  const std::vector<AnonymousWalk> pats{{0, 1, 0, 1}};
  EXPECT_EQ(extract_subgraph(p2, 0, none, pats).graph.node_count(), 1);
  const std::vector<RandomWalk> w2{{0, 1, 0, 1}};
  EXPECT_EQ(extract_subgraph(p2, 0, w2, pats).graph.node_count(), 2);

  const Graph c4 = shapes::cycle(4);
  const std::vector<RandomWalk> w4{{0, 1, 2, 3}};
  const std::vector<AnonymousWalk> p4{{0, 1, 2, 3}};
  const auto s = extract_subgraph(c4, 0, w4, p4);
  EXPECT_EQ(s.graph.node_count(), 4);
  EXPECT_EQ(s.graph.edge_count(), 4);
  EXPECT_EQ(s.parent_ids.front(), 0);
  const std::vector<AnonymousWalk> other{{0, 1, 0, 1}};
  EXPECT_EQ(extract_subgraph(c4, 0, w4, other).graph.node_count(), 1);
}

TEST(ExtractSubgraph, CapKeepsConnectivity) {
  Rng rng(5);
  const Graph g = shapes::cycle(12);
  const auto ws = sample_walks(g, 0, walks(5, 20), rng);
  std::vector<AnonymousWalk> pats;
  for (const auto& w : ws) pats.push_back(to_anonymous(w));
  std::sort(pats.begin(), pats.end());
  pats.erase(std::unique(pats.begin(), pats.end()), pats.end());
  for (int cap = 1; cap <= 6; ++cap) {
    const auto s = extract_subgraph(g, 0, ws, pats, cap);
    EXPECT_LE(s.graph.node_count(), cap);
    EXPECT_EQ(s.parent_ids.front(), 0);
    EXPECT_TRUE(is_connected(s.graph));
  }
}

TEST(ExtractAll, DeterministicAndConnected) {
  const Graph g = shapes::disjoint_union(shapes::cycle(6), shapes::star(3));
  WalkConfig w = walks(3, 10);
  w.seed = 9;
  const auto a = extract_all(g, w, 0, 1), b = extract_all(g, w, 0, 3);
  ASSERT_EQ(a.subgraphs.size(), static_cast<std::size_t>(g.node_count()));
  for (std::size_t v = 0; v < a.subgraphs.size(); ++v) {
    EXPECT_EQ(a.subgraphs[v].parent_ids, b.subgraphs[v].parent_ids);
    EXPECT_EQ(a.subgraphs[v].parent_ids.front(), static_cast<NodeId>(v));
    EXPECT_TRUE(is_connected(a.subgraphs[v].graph));
  }
  EXPECT_EQ(a.counts, b.counts);
}

TEST(Enumerate, Examples) {
  EXPECT_EQ(enumerate_anonymous_walks(shapes::path(2), 0, 2), (PatternCounts{{{0, 1, 0}, 1}}));
  EXPECT_EQ(enumerate_anonymous_walks(shapes::cycle(3), 0, 2), (PatternCounts{{{0, 1, 0}, 2}, {{0, 1, 2}, 2}}));
  EXPECT_EQ(enumerate_anonymous_walks(shapes::star(3), 0, 2), (PatternCounts{{{0, 1, 0}, 3}}));
  EXPECT_THROW(enumerate_anonymous_walks(shapes::complete(8), 0, 12, 1000), ResourceError);
}

TEST(Enumerate, TotalEqualsRowSumOfAdjacencyPower) {
  for (const auto& g : all_graphs(5)) {
    const Matrix a = g.adjacency_matrix();
    Matrix ap = Matrix::Identity(5, 5);
    for (int l = 1; l <= 4; ++l) {
      ap = ap * a;
      for (NodeId v = 0; v < 5; ++v) {
        std::uint64_t total = 0;
        for (const auto& [p, c] : enumerate_anonymous_walks(g, v, l)) total += c;
        ASSERT_EQ(static_cast<double>(total), ap.row(v).sum());
        ASSERT_EQ(total, count_walks_from(g, v, l));
      }
    }
  }
}

TEST(Distinguish, Examples) {
  const Graph c6 = shapes::cycle(6);
  const Graph c33 = shapes::disjoint_union(shapes::cycle(3), shapes::cycle(3));
  EXPECT_TRUE(walk_distributions_distinguish(c6, 0, c33, 0, 3));
  const Graph p3 = shapes::path(3);
  EXPECT_TRUE(walk_distributions_distinguish(p3, 0, p3, 1, 2));
  EXPECT_FALSE(walk_distributions_distinguish(p3, 0, p3, 2, 4));
  const Graph r = c6.relabeled(std::vector<NodeId>{5, 3, 1, 0, 2, 4});
  EXPECT_FALSE(walk_distributions_distinguish(c6, 1, r, 3, 6));
}
