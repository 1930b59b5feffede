#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mose/canonical.hpp"
#include "mose/data_io.hpp"
#include "mose/error.hpp"

using namespace mose;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mose_unit" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Dataset node_fixture(int n, int classes) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId v = 1; v < n; ++v) e.emplace_back(v - 1, v);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) labels[v] = v % classes;
  Dataset ds;
  ds.name = "fixture";
  ds.task = TaskKind::node_level;
  ds.class_count = classes;
  ds.graphs.push_back(Graph::from_edges(n, e, Matrix::Ones(n, 1), std::nullopt, labels));
  return ds;
}

}  // namespace

TEST(TuLoader, Mutag) {
  const Dataset ds = load_tu_dataset(fs::path(MOSE_TEST_DATA_DIR) / "MUTAG", "MUTAG");
  EXPECT_EQ(ds.graphs.size(), 188u);
  EXPECT_EQ(ds.class_count, 2);
  EXPECT_EQ(ds.graphs[0].feature_dim(), 7);  // seven atom types
  std::size_t nodes = 0;
  for (const auto& g : ds.graphs) nodes += static_cast<std::size_t>(g.node_count());
  EXPECT_NEAR(static_cast<double>(nodes) / 188.0, 17.93, 0.01);
}

TEST(TuLoader, SmallestFixtureIsOneP2) {
  const fs::path dir = scratch("p2");
  write(dir / "P2_A.txt", "1, 2\n2, 1\n");
  write(dir / "P2_graph_indicator.txt", "1\n1\n");
  write(dir / "P2_graph_labels.txt", "5\n");
  const Dataset ds = load_tu_dataset(dir, "P2");
  ASSERT_EQ(ds.graphs.size(), 1u);
  EXPECT_EQ(ds.graphs[0].node_count(), 2);
  EXPECT_EQ(ds.graphs[0].edge_count(), 1);
  EXPECT_EQ(ds.graphs[0].graph_label(), 0);
  EXPECT_EQ(ds.class_count, 1);
}

TEST(TuLoader, MissingFileIsIoErrorAndGarbageIsFormatError) {
  EXPECT_THROW(load_tu_dataset(scratch("empty"), "X"), IoError);
  const fs::path dir = scratch("bad");
  write(dir / "B_A.txt", "1, two\n");
  write(dir / "B_graph_indicator.txt", "1\n1\n");
  write(dir / "B_graph_labels.txt", "0\n");
  EXPECT_THROW(load_tu_dataset(dir, "B"), FormatError);
}

TEST(TuLoader, RoundTripPreservesGraphsLabelsAndFeatures) {
  const Dataset ds = gen_graph_five(10, 4);
  const fs::path dir = scratch("roundtrip");
  write_tu_dataset(ds, dir);
  const Dataset back = load_tu_dataset(dir, ds.name);
  ASSERT_EQ(back.graphs.size(), ds.graphs.size());
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    EXPECT_EQ(back.graphs[i].graph_label(), ds.graphs[i].graph_label());
    EXPECT_EQ(back.graphs[i].edges(), ds.graphs[i].edges());
    EXPECT_EQ(back.graphs[i].features(), ds.graphs[i].features());
  }
}

TEST(Generators, GraphCycleBalancedDeterministicAndSized) {
  const Dataset a = gen_graph_cycle(10, 9);
  EXPECT_EQ(a.class_count, 2);
  std::map<int, int> per_class;
  for (const auto& g : a.graphs) ++per_class[*g.graph_label()];
  EXPECT_EQ(per_class[0], 5);
  EXPECT_EQ(per_class[1], 5);

  const fs::path d1 = scratch("gc1"), d2 = scratch("gc2");
  write_tu_dataset(gen_graph_cycle(2, 17), d1);
  write_tu_dataset(gen_graph_cycle(2, 17), d2);
  for (const char* f : {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt", "_node_attributes.txt"})
    EXPECT_EQ(slurp(d1 / (std::string("GraphCycle") + f)), slurp(d2 / (std::string("GraphCycle") + f)));

  const Dataset big = gen_graph_cycle(60, 1);
  double nodes = 0;
  for (const auto& g : big.graphs) {
    nodes += g.node_count();
    EXPECT_TRUE(is_connected(g));
  }
  nodes /= 60.0;
  EXPECT_GE(nodes, 122.0);
  EXPECT_LE(nodes, 513.0);
}

TEST(Generators, GraphFiveHasFiveClassesAndConnectedGraphs) {
  const Dataset ds = gen_graph_five(25, 2);
  EXPECT_EQ(ds.class_count, 5);
  std::set<int> labels;
  for (const auto& g : ds.graphs) {
    labels.insert(*g.graph_label());
    EXPECT_TRUE(is_connected(g));
  }
  EXPECT_EQ(labels.size(), 5u);
  EXPECT_EQ(dataset_hash(gen_graph_five(5, 3)), dataset_hash(gen_graph_five(5, 3)));
  EXPECT_NE(dataset_hash(gen_graph_five(5, 3)), dataset_hash(gen_graph_five(5, 4)));
}

TEST(Folds, ArithmeticAndDisjointness) {
  const Dataset ds = gen_graph_five(100, 1);
  const SplitPlan plan = make_folds(ds, 10, 3);
  ASSERT_EQ(plan.folds.size(), 10u);
  std::multiset<int> seen;
  for (const auto& f : plan.folds) {
    EXPECT_EQ(f.test.size(), 10u);
    EXPECT_EQ(f.train.size(), 90u);
    seen.insert(f.test.begin(), f.test.end());
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(std::set<int>(seen.begin(), seen.end()).size(), 100u);
}

TEST(Folds, MutagSizesAndReproducibility) {
  const Dataset ds = load_tu_dataset(fs::path(MOSE_TEST_DATA_DIR) / "MUTAG", "MUTAG");
  const SplitPlan a = make_folds(ds, 10, 7), b = make_folds(ds, 10, 7);
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    EXPECT_TRUE(a.folds[i].test.size() == 18 || a.folds[i].test.size() == 19);
    EXPECT_EQ(a.folds[i].test, b.folds[i].test);
  }
}

TEST(NodeSplits, CornellSizedFixture) {
  const Dataset ds = node_fixture(183, 5);
  const SplitPlan plan = make_node_splits(ds, {0.6, 0.2, 0.2}, 11);
  int train = 0;
  std::vector<int> per_class(5, 0), class_size(5, 0);
  for (int v = 0; v < 183; ++v) {
    const int parts = plan.masks.train[v] + plan.masks.val[v] + plan.masks.test[v];
    EXPECT_EQ(parts, 1);
    train += plan.masks.train[v];
    per_class[v % 5] += plan.masks.train[v];
    ++class_size[v % 5];
  }
  EXPECT_TRUE(train == 109 || train == 110) << train;
  for (int c = 0; c < 5; ++c) EXPECT_LE(std::abs(per_class[c] - 0.6 * class_size[c]), 1.0) << "class " << c;
  const SplitPlan again = make_node_splits(ds, {0.6, 0.2, 0.2}, 11);
  EXPECT_EQ(plan.masks.train, again.masks.train);
  EXPECT_EQ(plan.masks.test, again.masks.test);
}

TEST(NodeSplits, AllTrain) {
  const Dataset ds = node_fixture(40, 3);
  const SplitPlan plan = make_node_splits(ds, {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(std::accumulate(plan.masks.train.begin(), plan.masks.train.end(), 0), 40);
}

TEST(NodeSplits, RatiosMustSumToOne) {
  EXPECT_THROW(make_node_splits(node_fixture(10, 2), {0.5, 0.2, 0.2}, 1), InvalidArgument);
}

TEST(NodeLoader, GeomGcnLayout) {
  const fs::path dir = scratch("toy_node");
  write(dir / "out1_node_feature_label.txt", "node_id\tfeature\tlabel\n0\t1,0\t0\n1\t0,1\t1\n2\t1,1\t1\n");
  write(dir / "out1_graph_edges.txt", "node_id\tnode_id\n0\t1\n1\t2\n2\t1\n");
  const Dataset ds = load_node_dataset(dir, "toy");
  ASSERT_EQ(ds.graphs.size(), 1u);
  EXPECT_EQ(ds.task, TaskKind::node_level);
  EXPECT_EQ(ds.class_count, 2);
  EXPECT_EQ(ds.graphs[0].edge_count(), 2);
  EXPECT_EQ(ds.graphs[0].node_labels(), (std::vector<int>{0, 1, 1}));
  EXPECT_EQ(ds.graphs[0].features()(2, 1), 1.0);
}
