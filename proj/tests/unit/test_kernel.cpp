#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "mose/canonical.hpp"
#include "mose/error.hpp"
#include "mose/kernel.hpp"

using namespace mose;

namespace {

KernelConfig only_step(int p) {
  KernelConfig cfg;
  cfg.max_step = p;
  cfg.step_mode = StepMode::sum_over_p;
  cfg.lambdas.assign(static_cast<std::size_t>(p) + 1, 0.0);
  cfg.lambdas[p] = 1.0;
  return cfg;
}

NodeSubgraph whole(const Graph& g) {
  std::vector<NodeId> all(static_cast<std::size_t>(g.node_count()));
  std::iota(all.begin(), all.end(), 0);
  return induced_subgraph(g, all);
}

Matrix uniform(std::mt19937_64& rng, int r, int c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Graph random_graph(std::mt19937_64& rng, NodeId n, double p) {
  std::bernoulli_distribution edge(p);
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (edge(rng)) e.emplace_back(u, v);
  return Graph::from_edges(n, e);
}

}  // namespace

TEST(RwkDiscrete, Examples) {
  KernelConfig zero;
  zero.max_step = 0;
  zero.step_mode = StepMode::sum_over_p;
  zero.lambdas = {1.0};
  zero.include_zero_step = true;
  EXPECT_EQ(rwk_discrete(shapes::path(2), shapes::path(3), zero), 6.0);
  EXPECT_EQ(rwk_discrete(shapes::path(2), shapes::path(2), only_step(1)), 4.0);
  EXPECT_EQ(rwk_discrete(shapes::cycle(5), shapes::empty(4), only_step(2)), 0.0);
}

TEST(RwkOracle, Examples) {
  EXPECT_EQ(rwk_oracle(shapes::cycle(3), shapes::cycle(3), 1), 36u);
  EXPECT_EQ(rwk_oracle(shapes::cycle(4), shapes::path(3), 0), 12u);
  // Factorization: pairs of walks = walks(P2) * walks(C3).
  EXPECT_EQ(rwk_oracle(shapes::path(2), shapes::cycle(3), 2), total_walks(shapes::path(2), 2) * total_walks(shapes::cycle(3), 2));
  EXPECT_EQ(rwk_oracle(shapes::path(2), shapes::cycle(3), 2), 24u);
}

TEST(RwkOracle, MatchesDiscreteOnSmallCorpus) {
  const auto graphs = all_graphs(4);
  for (const auto& g : graphs)
    for (const auto& h : graphs)
      for (int p = 1; p <= 3; ++p) ASSERT_EQ(rwk_discrete(g, h, only_step(p)), static_cast<double>(rwk_oracle(g, h, p)));
}

TEST(RwkDiff, UnitFeaturesReduceToTheOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    const Graph g = random_graph(rng, 5, 0.5).with_features(Matrix::Ones(5, 1));
    const Graph h = random_graph(rng, 4, 0.5).with_features(Matrix::Ones(4, 1));
    for (int p = 0; p <= 3; ++p) EXPECT_DOUBLE_EQ(rwk_diff(g, h, p), static_cast<double>(rwk_oracle(g, h, p)));
  }
}

TEST(RwkDiff, ZeroFeaturesAndZeroStep) {
  const Graph g = shapes::cycle(4).with_features(Matrix::Zero(4, 2));
  const Graph h = shapes::path(3).with_features(Matrix::Ones(3, 2));
  EXPECT_EQ(rwk_diff(g, h, 2), 0.0);
  std::mt19937_64 rng(4);
  const Matrix x = uniform(rng, 4, 3, 0, 1), y = uniform(rng, 3, 3, 0, 1);
  const double direct = (y * x.transpose()).array().square().sum();
  EXPECT_NEAR(rwk_diff(shapes::cycle(4).with_features(x), shapes::path(3).with_features(y), 0), direct, 1e-12);
}

TEST(HiddenAdjacency, RectifiedSymmetricZeroDiagonal) {
  Matrix w(3, 3);
  w << 5, 1, -4, 3, 7, 1, 2, -3, 9;
  const Matrix b = hidden_adjacency(w);
  EXPECT_EQ(b(0, 0), 0.0);
  EXPECT_EQ(b(0, 1), 2.0);
  EXPECT_EQ(b(1, 0), 2.0);
  EXPECT_EQ(b(0, 2), 0.0);  // (-4 + 2) / 2 < 0
  EXPECT_EQ(b(1, 2), 0.0);
}

TEST(RwkHidden, Examples) {
  std::mt19937_64 rng(1);
  const auto sub = whole(random_graph(rng, 5, 0.6).with_features(uniform(rng, 5, 2, 0, 1)));
  EXPECT_EQ(rwk_hidden(sub, {uniform(rng, 3, 3, 0, 1), Matrix::Zero(3, 2)}, 2), 0.0);
  EXPECT_EQ(rwk_hidden(sub, {Matrix::Constant(1, 1, 4.0), Matrix::Ones(1, 2)}, 1), 0.0);
  for (int p = 1; p <= 3; ++p) {
    const auto s4 = whole(random_graph(rng, 4, 0.6).with_features(uniform(rng, 4, 2, 0, 1)));
    const HiddenGraph hg{uniform(rng, 3, 3, -0.5, 1), uniform(rng, 3, 2, 0, 1)};
    const double a = rwk_hidden(s4, hg, p);
    const double b = rwk_diff(s4.graph.adjacency_matrix(), s4.graph.features(), hg.adjacency(), hg.features, p);
    EXPECT_NEAR(a, b, 1e-10 * std::abs(b));
  }
}

TEST(RwkHidden, PermutationInvariant) {
  std::mt19937_64 rng(6);
  const Graph g = random_graph(rng, 7, 0.4).with_features(uniform(rng, 7, 3, 0, 1));
  const HiddenGraph hg{uniform(rng, 4, 4, 0, 1), uniform(rng, 4, 3, -1, 1)};
  const std::vector<NodeId> perm{3, 6, 0, 1, 5, 2, 4};
  Matrix x(7, 3);
  for (NodeId v = 0; v < 7; ++v) x.row(perm[v]) = g.features().row(v);
  const Graph h = g.relabeled(perm).with_features(x);
  for (int p = 0; p <= 3; ++p) EXPECT_NEAR(rwk_hidden(whole(g), hg, p), rwk_hidden(whole(h), hg, p), 1e-10);
}

TEST(RwkHiddenGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  double worst = 0.0;
  for (int t = 0; t < 25; ++t) {
    const auto sub = whole(random_graph(rng, 6, 0.5).with_features(uniform(rng, 6, 2, 0, 1)));
    HiddenGraph hg{uniform(rng, 4, 4, 0.05, 1), uniform(rng, 4, 2, -1, 1)};
    const int p = 1 + t % 3;
    const KernelGrad g = rwk_hidden_grad(sub, hg, p);
    EXPECT_NEAR(g.value, rwk_hidden(sub, hg, p), 1e-12 * (1 + std::abs(g.value)));
    auto fd = [&](Matrix& m, const Matrix& analytic) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double s = m.data()[i];
        m.data()[i] = s + 1e-5;
        const double up = rwk_hidden(sub, hg, p);
        m.data()[i] = s - 1e-5;
        const double down = rwk_hidden(sub, hg, p);
        m.data()[i] = s;
        const double n = (up - down) / 2e-5, a = analytic.data()[i];
        worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1.0}));
      }
    };
    fd(hg.weights, g.d_weights);
    fd(hg.features, g.d_features);
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(RwkHiddenGrad, ZeroFeaturesAndNegativeWeights) {
  std::mt19937_64 rng(3);
  const auto sub = whole(random_graph(rng, 5, 0.7).with_features(uniform(rng, 5, 2, 0, 1)));
  const KernelGrad z = rwk_hidden_grad(sub, {uniform(rng, 3, 3, 0, 1), Matrix::Zero(3, 2)}, 2);
  EXPECT_EQ(z.value, 0.0);
  EXPECT_TRUE(z.d_weights.isZero());
  EXPECT_TRUE(z.d_features.allFinite());
  const KernelGrad n = rwk_hidden_grad(sub, {uniform(rng, 3, 3, -2, -0.1), uniform(rng, 3, 2, 0, 1)}, 2);
  EXPECT_TRUE(n.d_weights.isZero());
}

TEST(KernelFeatures, WidthsAndSingleStep) {
  std::mt19937_64 rng(9);
  const Graph g = random_graph(rng, 6, 0.5).with_features(uniform(rng, 6, 2, 0, 1));
  const KernelOperand op(g);
  std::vector<HiddenGraph> expert;
  for (int i = 0; i < 4; ++i) expert.push_back({uniform(rng, 3, 3, 0, 1), uniform(rng, 3, 2, 0, 1)});
  KernelConfig concat;
  concat.max_step = 3;
  concat.step_mode = StepMode::concat_over_p;
  EXPECT_EQ(concat.width(), 3);
  EXPECT_EQ(kernel_features(op, expert, concat).size(), 12);

  KernelConfig single;
  single.max_step = 2;
  single.step_mode = StepMode::single_p;
  const std::vector<HiddenGraph> one{expert[0]};
  const Vector f = kernel_features(op, one, single);
  ASSERT_EQ(f.size(), 1);
  EXPECT_NEAR(f[0], rwk_hidden(whole(g), expert[0], 2), 1e-12);
  const Vector e = expert_embed(whole(g), one, single, [](const Vector& v) { return v; });
  EXPECT_EQ(e, f);
}

TEST(HiddenGraphIo, RoundTripAndDot) {
  std::mt19937_64 rng(1);
  const HiddenGraph hg{uniform(rng, 3, 3, -1, 1), uniform(rng, 3, 2, -1, 1)};
  std::stringstream s;
  write_hidden_graph(s, hg);
  const HiddenGraph back = read_hidden_graph(s);
  EXPECT_EQ(back.weights, hg.weights);
  EXPECT_EQ(back.features, hg.features);

  Matrix w = Matrix::Zero(3, 3);
  w(0, 1) = w(1, 0) = 0.9;
  w(1, 2) = w(2, 1) = 0.005;
  const std::string dot = hidden_graph_dot({w, Matrix::Ones(3, 1)}, 0.01, "h");
  EXPECT_NE(dot.find("0 -- 1"), std::string::npos);
  EXPECT_EQ(dot.find("1 -- 2"), std::string::npos);
  const std::string empty = hidden_graph_dot({Matrix::Zero(2, 2), Matrix::Ones(2, 1)}, 0.01, "e");
  EXPECT_NE(empty.find("graph"), std::string::npos);
}
