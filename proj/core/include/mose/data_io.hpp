#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mose/graph.hpp"

namespace mose {

enum class TaskKind { graph_level, node_level };

struct Dataset {
  std::string name;
  TaskKind task = TaskKind::graph_level;
  int class_count = 0;
  /// Node-level datasets hold exactly one graph with node_labels set
  /// (-1 marks an unlabeled node).
  std::vector<Graph> graphs;
};

/// Checks the Dataset invariants (label ranges, node-level shape). Throws
/// InvalidArgument with a description of the first violation.
void validate(const Dataset& ds);

/// Loads `<dir>/<name>_*.txt` in TU benchmark format.
///
/// Node labels become one-hot features, node attributes are appended as real
/// columns, and attribute-free datasets get degree one-hot features capped at
/// the dataset-wide maximum degree. Graph labels are remapped to 0..C-1 in
/// ascending order of the raw values.
Dataset load_tu_dataset(const std::filesystem::path& dir, const std::string& name);

/// Writes a graph-level dataset in TU format. Features go to
/// `_node_attributes.txt` so a reload reproduces them exactly.
void write_tu_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Loads a single-graph node classification dataset from the Geom-GCN text
/// layout: `out1_node_feature_label.txt` (id, comma-separated features,
/// label; tab separated, header line) and `out1_graph_edges.txt`.
Dataset load_node_dataset(const std::filesystem::path& dir, const std::string& name);

/// Two-class synthetic set: Barabasi-Albert communities wired in a cycle
/// (label 0) or an acyclic tree layout (label 1).
Dataset gen_graph_cycle(int count, std::uint64_t seed);

/// Five-class synthetic set: communities wired as caveman (all-pairs), cycle,
/// grid, ladder or star (labels 0..4 in that order).
Dataset gen_graph_five(int count, std::uint64_t seed);

/// FNV-1a digest of structure, labels and features; used in run manifests.
std::uint64_t dataset_hash(const Dataset& ds);

enum class SplitKind { k_fold, masks };

struct Fold {
  std::vector<int> train;
  std::vector<int> test;
};

struct NodeMasks {
  std::vector<std::uint8_t> train;
  std::vector<std::uint8_t> val;
  std::vector<std::uint8_t> test;
};

struct SplitPlan {
  SplitKind kind = SplitKind::k_fold;
  std::vector<Fold> folds;
  NodeMasks masks;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Stratified k-fold partition of the graph indices. Each class is shuffled
/// with the seed and dealt round-robin, so fold sizes differ by at most one.
SplitPlan make_folds(const Dataset& ds, int k, std::uint64_t seed);

/// Per-class stratified train/val/test masks over labeled nodes. Per-class
/// sizes are floor(ratio * class size); leftovers are dealt train, val, test
/// in turn.
SplitPlan make_node_splits(const Dataset& ds, std::array<double, 3> ratios, std::uint64_t seed);

}  // namespace mose
