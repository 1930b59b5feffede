#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "mose/error.hpp"
#include "mose/graph.hpp"

using namespace mose;

namespace {

Graph random_graph(std::mt19937_64& rng, NodeId n, double p) {
  std::bernoulli_distribution edge(p);
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (edge(rng)) e.emplace_back(u, v);
  return Graph::from_edges(n, e);
}

}  // namespace

TEST(Graph, FromEdgesMergesDuplicatesAndSortsNeighbors) {
  const std::vector<std::pair<NodeId, NodeId>> e{{2, 0}, {0, 1}, {0, 2}, {1, 0}};
  const Graph g = Graph::from_edges(3, e);
  EXPECT_EQ(g.node_count(), 3);
  EXPECT_EQ(g.edge_count(), 2);
  const auto nb = g.neighbors(0);
  EXPECT_EQ(std::vector<NodeId>(nb.begin(), nb.end()), (std::vector<NodeId>{1, 2}));
  EXPECT_EQ(g.feature_dim(), 0);
}

TEST(Graph, RejectsSelfLoopsAndBadIds) {
  const std::vector<std::pair<NodeId, NodeId>> loop{{1, 1}};
  EXPECT_THROW(Graph::from_edges(3, loop), InvalidArgument);
  const std::vector<std::pair<NodeId, NodeId>> out{{0, 3}};
  EXPECT_THROW(Graph::from_edges(3, out), InvalidArgument);
  EXPECT_THROW(Graph::from_edges(3, {}, Matrix::Zero(2, 1)), InvalidArgument);
}

TEST(Graph, CsrInvariantsHoldOnRandomGraphs) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const Graph g = random_graph(rng, std::uniform_int_distribution<NodeId>(1, 15)(rng), 0.3);
    const auto off = g.offsets();
    ASSERT_EQ(off.back(), static_cast<std::int32_t>(g.neighbor_list().size()));
    ASSERT_TRUE(std::is_sorted(off.begin(), off.end()));
    for (NodeId v = 0; v < g.node_count(); ++v)
      for (NodeId u : g.neighbors(v)) {
        ASSERT_NE(u, v);
        ASSERT_TRUE(g.has_edge(u, v));
      }
    const Matrix a = g.adjacency_matrix();
    ASSERT_TRUE(a.isApprox(a.transpose()));
    ASSERT_EQ(a.sum(), 2.0 * static_cast<double>(g.edge_count()));
  }
}

TEST(Graph, RelabelingPreservesStructure) {
  std::mt19937_64 rng(2);
  const Graph g = random_graph(rng, 9, 0.4);
  std::vector<NodeId> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Graph h = g.relabeled(perm);
  EXPECT_EQ(h.edge_count(), g.edge_count());
  for (auto [u, v] : g.edges()) EXPECT_TRUE(h.has_edge(perm[u], perm[v]));
}

TEST(InducedSubgraph, TriangleOnTwoNodes) {
  const std::vector<NodeId> nodes{0, 1};
  const auto s = induced_subgraph(shapes::cycle(3), nodes);
  EXPECT_EQ(s.graph.node_count(), 2);
  EXPECT_EQ(s.graph.edge_count(), 1);
}

TEST(InducedSubgraph, Singleton) {
  const std::vector<NodeId> nodes{2};
  const auto s = induced_subgraph(shapes::complete(4), nodes);
  EXPECT_EQ(s.graph.node_count(), 1);
  EXPECT_EQ(s.graph.edge_count(), 0);
  EXPECT_EQ(s.parent_ids, nodes);
  EXPECT_EQ(s.center, 0);
}

TEST(InducedSubgraph, PathKeepsOnlyEdgesWithBothEndpoints) {
  // P4 0-1-2-3 on {0,2,3}: only parent edge (2,3) survives, locally (1,2).
  const std::vector<NodeId> nodes{0, 2, 3};
  const auto s = induced_subgraph(shapes::path(4), nodes);
  EXPECT_EQ(s.graph.node_count(), 3);
  const auto e = s.graph.edges();
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(s.parent_ids[e[0].first], 2);
  EXPECT_EQ(s.parent_ids[e[0].second], 3);
}

TEST(InducedSubgraph, CopiesFeatureRows) {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  const Graph g = shapes::path(3).with_features(x);
  const std::vector<NodeId> nodes{2, 0};
  const auto s = induced_subgraph(g, nodes);
  EXPECT_EQ(s.graph.features().row(0), x.row(2));
  EXPECT_EQ(s.graph.features().row(1), x.row(0));
}

TEST(DirectProduct, TwoEdges) {
  const Graph p = direct_product(shapes::path(2), shapes::path(2));
  EXPECT_EQ(p.node_count(), 4);
  EXPECT_EQ(p.edge_count(), 2);
}

TEST(DirectProduct, WithEdgelessFactorIsEdgeless) {
  const Graph p = direct_product(shapes::cycle(5), shapes::empty(1));
  EXPECT_EQ(p.node_count(), 5);
  EXPECT_EQ(p.edge_count(), 0);
}

TEST(DirectProduct, TrianglesGiveEighteenEdges) {
  const Graph p = direct_product(shapes::cycle(3), shapes::cycle(3));
  EXPECT_EQ(p.node_count(), 9);
  EXPECT_EQ(p.edge_count(), 18);
  EXPECT_EQ(p.adjacency_matrix().sum(), 36.0);
}

TEST(DirectProduct, EdgeCountIsTwiceProductOnRandomFactors) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Graph g = random_graph(rng, 6, 0.5), h = random_graph(rng, 5, 0.5);
    const Graph p = direct_product(g, h);
    EXPECT_EQ(p.edge_count(), 2 * g.edge_count() * h.edge_count());
    // Oracle: A_x = A kron A'.
    const Matrix a = g.adjacency_matrix(), b = h.adjacency_matrix();
    Matrix kron(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) kron.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    EXPECT_TRUE(p.adjacency_matrix().isApprox(kron) || (kron.sum() == 0 && p.edge_count() == 0));
  }
}

TEST(DegreeFeatures, OneHotWithClamp) {
  const Matrix s3 = degree_features(shapes::star(3), 4);
  EXPECT_EQ(s3.cols(), 5);
  EXPECT_EQ(s3(0, 3), 1.0);
  EXPECT_EQ(s3.row(0).sum(), 1.0);
  const Matrix iso = degree_features(shapes::empty(1), 4);
  EXPECT_EQ(iso(0, 0), 1.0);
  const Matrix s7 = degree_features(shapes::star(7), 4);
  EXPECT_EQ(s7(0, 4), 1.0);
  EXPECT_EQ(s7.row(0).sum(), 1.0);
}

TEST(Ball, RadiusOneIsClosedNeighborhood) {
  const auto b = ball(shapes::path(5), 2, 1);
  EXPECT_EQ(b.front(), 2);
  EXPECT_EQ(std::vector<NodeId>(b.begin() + 1, b.end()), (std::vector<NodeId>{1, 3}));
  EXPECT_EQ(ball(shapes::path(5), 0, 10).size(), 5u);
}

TEST(Shapes, Connectivity) {
  EXPECT_TRUE(is_connected(shapes::cycle(6)));
  EXPECT_FALSE(is_connected(shapes::disjoint_union(shapes::cycle(3), shapes::cycle(3))));
}
