#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mose/data_io.hpp"
#include "mose/graph.hpp"
#include "mose/kernel.hpp"
#include "mose/nn.hpp"

namespace mose {

enum class CombineMode { weighted_sum, concat };
enum class Pooling { mean, sum, max };
/// Elementwise map applied to raw kernel features before the expert
/// transform. signed_log is x -> sign(x) log(1 + |x|).
enum class FeatureScaling { none, signed_log };

struct Route {
  std::vector<int> indices;     ///< ascending expert ids
  std::vector<double> weights;  ///< softmax over the retained logits
};

/// eta(v) = act(x_v + sum_{u in V_v} alpha_uv x_u), alpha = softmax_u(x_u . x_v).
Vector gate_aggregate(const NodeSubgraph& sub, Activation act = Activation::relu);

/// psi = eta W_g + noise (.) softplus(eta W_n); `noise` == nullptr means eval mode.
Vector gate_scores(const Vector& eta, const ConstMatrixRef& w_clean, const ConstMatrixRef& w_noise,
                   const Vector* noise);

/// Top-k entries of psi (ties to the lower index), softmax over those only.
Route route(const Vector& psi, int k);

/// Weighted sum of the selected expert outputs; `embeddings[i]` belongs to
/// `r.indices[i]`.
Vector combine_weighted(std::span<const Vector> embeddings, const Route& r);

/// Concatenation input: zeta_m h_m in block m of a K*d vector.
Vector concat_blocks(std::span<const Vector> embeddings, const Route& r, int experts);

Vector readout(std::span<const Vector> embeddings, Pooling pooling);

double softplus(double x) noexcept;

struct ModelConfig {
  int feature_dim = 0;
  int class_count = 2;
  int experts = 5;                ///< K
  int hidden_graphs = 8;          ///< N per expert
  std::vector<int> expert_sizes;  ///< empty: 2..K+1
  int hidden_dim = 32;            ///< d
  int k_ept = 2;
  KernelConfig kernel;
  CombineMode combine = CombineMode::weighted_sum;
  Pooling pooling = Pooling::mean;
  Activation gate_activation = Activation::relu;
  FeatureScaling scaling = FeatureScaling::signed_log;
  double dropout = 0.2;
  double gate_init_std = 0.1;
  TaskKind task = TaskKind::graph_level;

  std::vector<int> sizes() const;
  void validate() const;
};

/// Per-node inputs that do not depend on parameters.
struct PreparedNode {
  KernelOperand operand;
  Vector eta;
};

PreparedNode prepare_node(const NodeSubgraph& sub, Activation act = Activation::relu);

/// Identifies a forward pass for random substreams. Noise and dropout are
/// drawn only when `train` is set; identical contexts give identical draws.
struct ForwardContext {
  bool train = false;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t item = 0;
};

struct ExpertTape {
  int expert = -1;
  std::vector<KernelTape> kernels;
  Vector raw;       ///< kernel features before scaling
  Vector features;  ///< transform input
  FeedForward::Cache ff;
  Vector out;
};

struct NodeTape {
  Vector noise;      ///< epsilon (empty in eval mode)
  Vector noise_pre;  ///< eta W_n
  Vector psi;
  Route route;
  std::vector<ExpertTape> experts;  ///< one per route index, same order
  Vector concat;
  FeedForward::Cache combine_ff;
  Vector h;
};

struct HeadTape {
  FeedForward::Cache ff;
  Vector logits;
};

class MoseModel {
 public:
  MoseModel() = default;
  MoseModel(ModelConfig cfg, std::uint64_t init_seed);
  MoseModel(const MoseModel& other);
  MoseModel& operator=(const MoseModel& other);

  const ModelConfig& config() const noexcept { return cfg_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  int gate_clean_slot() const noexcept { return w_clean_; }
  int gate_noise_slot() const noexcept { return w_noise_; }
  int hidden_weight_slot(int expert, int index) const { return hg_w_.at(expert).at(index); }
  int hidden_feature_slot(int expert, int index) const { return hg_z_.at(expert).at(index); }

  HiddenGraph hidden_graph(int expert, int index) const;

  /// Node embedding h(v): gate, route, selected experts, combine.
  Vector embed_node(const PreparedNode& node, const ForwardContext& ctx, std::uint64_t node_id,
                    NodeTape* tape) const;

  /// Accumulates gradients of a loss with upstream dL/dh and an extra
  /// dL/dzeta (aligned with the route; may be empty) into `grads`.
  void embed_node_backward(const PreparedNode& node, const NodeTape& tape, const Vector& dh,
                           std::span<const double> d_route_weights, bool train, std::span<double> grads) const;

  /// Classifier head; `stream` distinguishes dropout substreams.
  Vector head_forward(const Vector& h, const ForwardContext& ctx, std::uint64_t stream, HeadTape* tape) const;
  Vector head_backward(const HeadTape& tape, const Vector& dlogits, std::span<double> grads) const;

  /// Expert embeddings computed since construction (all threads).
  std::uint64_t expert_evaluations() const noexcept { return evaluations_.load(); }

  /// Discrete decisions taken in a forward pass (route ids, ReLU branches,
  /// rectifier pattern of every hidden adjacency).
  void append_signature(const NodeTape& tape, std::vector<std::uint8_t>& sig) const;
  static void append_signature(const HeadTape& tape, std::vector<std::uint8_t>& sig);
  void append_parameter_signature(std::vector<std::uint8_t>& sig) const;

 private:
  void build();
  void initialize(std::uint64_t seed);

  ModelConfig cfg_;
  ParamStore params_;
  int w_clean_ = -1, w_noise_ = -1;
  std::vector<std::vector<int>> hg_w_, hg_z_;
  std::vector<FeedForward> transforms_;
  FeedForward combine_ff_;
  FeedForward head_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
};

/// Eval-mode single-node forward: logits and route.
struct NodeForward {
  Vector logits;
  Route route;
};
NodeForward forward(const MoseModel& model, const PreparedNode& node, const ForwardContext& ctx = {});

/// Readout of eval-mode node embeddings (graph representation before the head).
Vector graph_embedding(const MoseModel& model, std::span<const PreparedNode> nodes);

/// d(readout)/d(embedding i) applied to `dout`.
std::vector<Vector> readout_backward(std::span<const Vector> embeddings, Pooling pooling, const Vector& dout);

}  // namespace mose
