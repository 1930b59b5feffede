#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mose/error.hpp"
#include "mose/trainer.hpp"

using namespace mose;

namespace {

// Cycle of length `ring` with a pendant path of `tail` nodes hanging off node 0,
// featurized like every attribute-free dataset (degree one-hot).
Graph ring_with_tail(NodeId ring, NodeId tail, int label) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId v = 0; v < ring; ++v) e.emplace_back(v, (v + 1) % ring);
  NodeId prev = 0;
  for (NodeId t = 0; t < tail; ++t) {
    e.emplace_back(prev, ring + t);
    prev = ring + t;
  }
  const Graph g = Graph::from_edges(ring + tail, e, Matrix(), label);
  return g.with_features(degree_features(g, 3));
}

// Ten graphs per class with tail lengths cycling through 1..max_tail.
Dataset toy_dataset(NodeId max_tail = 5) {
  Dataset ds;
  ds.name = "toy";
  ds.class_count = 2;
  for (NodeId i = 0; i < 10; ++i) {
    const NodeId tail = 1 + i % max_tail;
    ds.graphs.push_back(ring_with_tail(3, tail, 0));
    ds.graphs.push_back(ring_with_tail(4, tail, 1));
  }
  return ds;
}

PreparedDataset toy_prepared(NodeId max_tail = 5) {
  WalkConfig w;
  w.walk_length = 4;
  w.walks_per_node = 10;
  w.seed = 1;
  return prepare_dataset(toy_dataset(max_tail), w);
}

ModelConfig toy_model() {
  ModelConfig c;
  c.feature_dim = 4;
  c.class_count = 2;
  c.experts = 3;
  c.hidden_graphs = 4;
  c.hidden_dim = 16;
  c.k_ept = 2;
  c.kernel.max_step = 3;
  return c;
}

TrainConfig toy_train(std::uint64_t seed, int epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.seed = seed;
  return t;
}

TrainSplit all_items(const PreparedDataset& data) {
  TrainSplit s;
  s.train.resize(data.item_count());
  std::iota(s.train.begin(), s.train.end(), 0);
  return s;
}

}  // namespace

TEST(CvSquared, Examples) {
  EXPECT_EQ(cv_squared(std::vector<double>{3, 3, 3}), 0.0);
  // The 1e-10 guard in the denominator shifts values in the 11th digit.
  EXPECT_NEAR(cv_squared(std::vector<double>{2, 4}), 1.0 / 9.0, 1e-9);
  EXPECT_NEAR(cv_squared(std::vector<double>{7, 0, 0, 0}), 3.0, 1e-9);
}

TEST(CvSquared, GradientMatchesFiniteDifferences) {
  std::vector<double> t{0.4, 2.5, 1.1, 0.9};
  std::vector<double> g;
  cv_squared(t, &g);
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto u = t, d = t;
    u[i] += 1e-6;
    d[i] -= 1e-6;
    EXPECT_NEAR(g[i], (cv_squared(u) - cv_squared(d)) / 2e-6, 1e-7);
  }
}

TEST(ImportanceLoss, TotalsFromRoutes) {
  const std::vector<Route> routes{{{0, 1}, {0.5, 0.5}}, {{1}, {1.0}}, {{0, 2}, {0.25, 0.75}}};
  EXPECT_EQ(expert_importance(routes, 3), (std::vector<double>{0.75, 1.5, 0.75}));
  EXPECT_NEAR(importance_loss(routes, 3), cv_squared(std::vector<double>{0.75, 1.5, 0.75}), 1e-15);
  std::vector<std::vector<double>> d;
  importance_loss(routes, 3, &d);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[1].size(), 1u);
}

TEST(TotalLoss, Examples) {
  EXPECT_EQ(total_loss(1.0, 0.5, 0.0), 1.0);
  EXPECT_EQ(total_loss(1.0, 0.0, 0.3), 1.0);
  EXPECT_NEAR(total_loss(1.0, 0.5, 0.2), 1.1, 1e-15);
}

TEST(CrossEntropy, UniformLogits) {
  Vector d;
  EXPECT_NEAR(cross_entropy(Vector::Zero(2), 0, &d), std::log(2.0), 1e-15);
  EXPECT_NEAR(d[0], -0.5, 1e-15);
  EXPECT_NEAR(d[1], 0.5, 1e-15);
}

TEST(Metrics, PerfectAndConstantPredictors) {
  const std::vector<int> truth{0, 1, 0, 1};
  EXPECT_EQ(accuracy(truth, truth), 1.0);
  EXPECT_EQ(macro_f1(truth, truth), 1.0);
  const std::vector<int> zeros{0, 0, 0, 0};
  EXPECT_EQ(accuracy(truth, zeros), 0.5);
  EXPECT_NEAR(macro_f1(truth, zeros), (2.0 / 3.0) / 2.0, 1e-15);
}

TEST(Summarize, PopulationStd) {
  CvSummary s;
  s.fold_accuracy = {0.8, 1.0};
  summarize(s);
  EXPECT_NEAR(s.mean, 0.9, 1e-15);
  EXPECT_NEAR(s.std, 0.1, 1e-15);
}

TEST(TrainConfig, Validation) {
  TrainConfig t;
  t.beta = -1;
  EXPECT_THROW(t.validate(), InvalidArgument);
  t = {};
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), InvalidArgument);
}

TEST(Evaluate, EmptyPartThrows) {
  const PreparedDataset data = toy_prepared();
  const MoseModel model(toy_model(), 1);
  EXPECT_THROW(evaluate(model, data, std::vector<int>{}), InvalidArgument);
}

TEST(Evaluate, InvariantToItemOrder) {
  const PreparedDataset data = toy_prepared();
  const MoseModel model(toy_model(), 2);
  std::vector<int> ids(data.item_count());
  std::iota(ids.begin(), ids.end(), 0);
  const Metrics a = evaluate(model, data, ids);
  std::reverse(ids.begin(), ids.end());
  const Metrics b = evaluate(model, data, ids);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_NEAR(a.loss_task, b.loss_task, 1e-14);
}

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
  const PreparedDataset data = toy_prepared();
  MoseModel model(toy_model(), 3);
  const std::vector<double> before(model.params().values().begin(), model.params().values().end());
  const TrainResult r = train(model, data, all_items(data), toy_train(1, 0));
  EXPECT_TRUE(std::equal(before.begin(), before.end(), model.params().values().begin()));
  EXPECT_EQ(r.epochs_run, 0);
  EXPECT_EQ(r.train.accuracy, evaluate(MoseModel(toy_model(), 3), data, all_items(data).train).accuracy);
}

TEST(Train, SeparatesTrianglesFromSquares) {
  const PreparedDataset data = toy_prepared();
  MoseModel model(toy_model(), 4);
  const TrainResult r = train(model, data, all_items(data), toy_train(4, 200));
  EXPECT_EQ(r.train.accuracy, 1.0);
}

TEST(Train, LossDecreasesOverFirstTenEpochs) {
  const PreparedDataset data = toy_prepared();
  std::vector<double> drops;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MoseModel model(toy_model(), seed);
    std::vector<double> loss;
    train(model, data, all_items(data), toy_train(seed, 10), [&](const EpochRecord& rec) {
      if (rec.split == "train") loss.push_back(total_loss(rec.loss_task, rec.loss_importance, 0.1));
    });
    drops.push_back(loss.front() - loss.back());
  }
  std::sort(drops.begin(), drops.end());
  EXPECT_GT(drops[2], 0.0);
}

TEST(Train, DeterministicAcrossThreadCounts) {
  const PreparedDataset data = toy_prepared();
  MoseModel a(toy_model(), 5), b(toy_model(), 5);
  TrainConfig ta = toy_train(5, 3), tb = ta;
  tb.threads = 3;
  train(a, data, all_items(data), ta);
  train(b, data, all_items(data), tb);
  EXPECT_TRUE(std::equal(a.params().values().begin(), a.params().values().end(), b.params().values().begin()));
}

TEST(CrossValidate, TwoFoldsOnToySet) {
  // Single pendant node: held-out graphs share their shape with training graphs.
  const Dataset ds = toy_dataset(1);
  const PreparedDataset data = toy_prepared(1);
  const SplitPlan plan = make_folds(ds, 2, 6);
  TrainConfig t = toy_train(6, 200);
  t.val_fraction = 0.0;
  const CvSummary s = cross_validate(data, plan, toy_model(), t);
  EXPECT_EQ(s.fold_accuracy.size(), 2u);
  EXPECT_GE(s.mean, 0.9);
  const CvSummary again = cross_validate(data, plan, toy_model(), t);
  EXPECT_EQ(s.fold_accuracy, again.fold_accuracy);
}

TEST(GradCheck, NoiseBranchOnlyInTrainMode) {
  const PreparedDataset data = toy_prepared();
  ModelConfig c = toy_model();
  c.hidden_graphs = 2;
  c.hidden_dim = 6;
  MoseModel model(c, 7);
  for (const auto& slot : model.params().slots())
    if (slot.name.ends_with(".b1") || slot.name.ends_with(".b2"))
      for (std::size_t i = 0; i < slot.size(); ++i) model.params().values()[slot.offset + i] = 0.05 * double(i % 3) - 0.04;
  const std::vector<int> batch{0, 1};
  GradCheckOptions opts;
  opts.beta = 0.0;
  opts.train_mode = false;
  const GradCheckResult eval = grad_check(model, data, batch, opts);
  EXPECT_LT(eval.max_rel_error, 1e-4);
  EXPECT_TRUE(model.params().view(std::span<const double>(eval.grads), model.gate_noise_slot()).isZero());

  opts.train_mode = true;
  const GradCheckResult tr = grad_check(model, data, batch, opts);
  EXPECT_LT(tr.max_rel_error, 1e-4);
  EXPECT_FALSE(model.params().view(std::span<const double>(tr.grads), model.gate_noise_slot()).isZero());
}
