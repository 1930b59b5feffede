#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mose/kernel.hpp"
#include "mose/moe.hpp"
#include "mose/trainer.hpp"
#include "mose/walks.hpp"

namespace mose {

std::string to_string(StepMode m);
std::string to_string(CombineMode m);
std::string to_string(Pooling p);
std::string to_string(Activation a);
std::string to_string(FeatureScaling s);
std::string to_string(TaskKind t);

StepMode parse_step_mode(std::string_view s);
CombineMode parse_combine_mode(std::string_view s);
Pooling parse_pooling(std::string_view s);
Activation parse_activation(std::string_view s);
FeatureScaling parse_feature_scaling(std::string_view s);
TaskKind parse_task_kind(std::string_view s);

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Everything a command needs, merged from defaults, an optional key=value
/// file and command-line flags (later sources win). Keys are the long flag
/// names without dashes prefix, e.g. "walk-length".
struct RunConfig {
  std::string data_dir = "data";
  std::string dataset = "MUTAG";
  std::uint64_t seed = 0;
  std::string out_dir = "runs";
  int threads = 1;

  int walk_length = 4;
  int walks_per_node = 20;
  int k_walk = 8;
  int subgraph_cap = 64;

  int steps = 3;
  StepMode step_mode = StepMode::concat_over_p;
  std::vector<double> lambdas;
  bool include_zero_step = false;

  int experts = 5;
  int hidden_graphs = 8;
  std::vector<int> expert_sizes;
  int hidden_dim = 32;
  int k_ept = 2;
  CombineMode combine = CombineMode::weighted_sum;
  Pooling pooling = Pooling::mean;
  Activation gate_activation = Activation::relu;
  FeatureScaling feature_scaling = FeatureScaling::signed_log;

  double beta = 0.1;
  int epochs = 400;
  double lr = 1e-3;
  double dropout = 0.2;
  int batch_size = 2;
  int patience = 0;
  double val_fraction = 0.0;
  int folds = 10;
  int splits = 5;
  double train_ratio = 0.6;
  double val_ratio = 0.2;
  double test_ratio = 0.2;

  int count = 1000;  ///< graphs generated by `gen`
  double prune_threshold = 0.01;

  static const std::vector<std::string>& keys();
  static bool is_key(std::string_view key);

  /// Throws InvalidArgument for an unknown key or an unparsable value.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// `key = value` lines; blank lines and '#' comments ignored.
  void load_file(const std::filesystem::path& path);
  ConfigEntries entries() const;
  void validate() const;

  WalkConfig walk_config() const;
  KernelConfig kernel_config() const;
  ModelConfig model_config(int feature_dim, int class_count, TaskKind task) const;
  TrainConfig train_config() const;
};

/// Config echo, seed and dataset hash as `key = value` lines.
void write_manifest(const std::filesystem::path& path, const RunConfig& cfg, std::uint64_t dataset_hash,
                    const ConfigEntries& extra = {});

}  // namespace mose
