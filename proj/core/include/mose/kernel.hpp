#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mose/graph.hpp"

namespace mose {

using MatrixRef = Eigen::Ref<Matrix>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

enum class StepMode { single_p, sum_over_p, concat_over_p };

struct KernelConfig {
  int max_step = 3;            ///< P
  std::vector<double> lambdas; ///< lambda_0..lambda_P; empty means all ones
  StepMode step_mode = StepMode::concat_over_p;
  bool include_zero_step = false;

  double lambda(int p) const;
  /// Step indices that contribute to kernel features (p = 0 only if enabled).
  std::vector<int> steps() const;
  /// Kernel features produced per hidden graph.
  int width() const;
  void validate() const;

  /// lambda_p = gamma^p.
  static KernelConfig geometric(int max_step, double gamma, StepMode mode = StepMode::concat_over_p);
};

/// Learnable structure probe: raw weights W (s x s) and features Z (s x f).
struct HiddenGraph {
  Matrix weights;
  Matrix features;

  int size() const noexcept { return static_cast<int>(weights.rows()); }
  int feature_dim() const noexcept { return static_cast<int>(features.cols()); }
  /// rect((W + W^T) / 2) with a zero diagonal.
  Matrix adjacency() const;
};

/// Effective hidden adjacency from raw weights: rect((W + W^T) / 2), zero diagonal.
Matrix hidden_adjacency(const ConstMatrixRef& weights);

/// Maps a gradient with respect to the effective adjacency back to the raw
/// weights (subgradient 0 at the rectifier kink and on the diagonal), adding
/// into `d_weights`.
void hidden_adjacency_backward(const ConstMatrixRef& weights, const ConstMatrixRef& d_adjacency, MatrixRef d_weights);

struct KernelGrad {
  double value = 0.0;
  Matrix d_weights;
  Matrix d_features;
};

/// sum_p lambda_p * 1^T A_x^p 1 over p = 0..P with A_x the direct product
/// adjacency (materialized). single_p mode uses p = P only.
double rwk_discrete(const Graph& g, const Graph& h, const KernelConfig& cfg);

/// Number of pairs of length-p walks (one in g, one in h), counted by
/// explicit simultaneous enumeration. Throws ResourceError past `budget`.
std::uint64_t rwk_oracle(const Graph& g, const Graph& h, int p, std::uint64_t budget = 10'000'000);

/// s^T (A^p kron A'^p) s with s = vec(X' X^T), evaluated from the two dense
/// factor powers without forming the product graph.
double rwk_diff(const Graph& g, const Graph& h, int p);

/// Same quadruple sum for weighted adjacencies: A with features X against B
/// with features Z.
double rwk_diff(const ConstMatrixRef& a, const ConstMatrixRef& x, const ConstMatrixRef& b, const ConstMatrixRef& z,
                int p);

/// Sum of all entries of A^p (total number of length-p walks).
std::uint64_t total_walks(const Graph& g, int p);

/// A subgraph prepared for repeated kernel evaluation: CSR adjacency plus a
/// sparse view of the feature rows (one-hot features make S = Z X^T a gather).
class KernelOperand {
 public:
  KernelOperand() = default;
  explicit KernelOperand(const Graph& g);

  int size() const noexcept { return n_; }
  int feature_dim() const noexcept { return f_; }
  std::int64_t arc_count() const noexcept { return static_cast<std::int64_t>(neighbors_.size()); }

  /// out = Z X^T (s x n).
  void similarity(const ConstMatrixRef& z, Matrix& out) const;
  /// dz += ds X.
  void similarity_backward(const ConstMatrixRef& ds, MatrixRef dz) const;
  /// out = t A (t is s x n).
  void times_adjacency(const Matrix& t, Matrix& out) const;

 private:
  int n_ = 0;
  int f_ = 0;
  std::vector<std::int32_t> offsets_;
  std::vector<NodeId> neighbors_;
  std::vector<std::int32_t> feat_offsets_;
  std::vector<std::int32_t> feat_cols_;
  std::vector<double> feat_values_;
};

/// Forward state for one (operand, hidden graph) pair over steps 0..P.
/// walk[p] = B^p S A^p and right[p - 1] = walk[p - 1] A, so that
/// K_p = <S, walk[p]>.
struct KernelTape {
  Matrix similarity;
  Matrix adjacency;
  std::vector<Matrix> walk;
  std::vector<Matrix> right;
  std::vector<double> values;  ///< K_0..K_P
};

/// Evaluates K_p(G_v, H) for p = 0..max_step by repeated multiplication
/// (never forming A^p). O(P (s^2 n + s m) + s nnz(X)).
void hidden_kernel_forward(const KernelOperand& op, const ConstMatrixRef& weights, const ConstMatrixRef& features,
                           int max_step, KernelTape& tape);

/// Reverse pass for sum_p upstream[p] * K_p; accumulates into the gradients.
void hidden_kernel_backward(const KernelOperand& op, const KernelTape& tape, std::span<const double> upstream,
                            const ConstMatrixRef& weights, MatrixRef d_weights, MatrixRef d_features);

/// 1^T [Z X^T (.) rect(W)^p Z X^T A^p] 1 for the subgraph against the hidden graph.
double rwk_hidden(const NodeSubgraph& sub, const HiddenGraph& hidden, int p);

/// Value of rwk_hidden plus its gradients with respect to W and Z.
KernelGrad rwk_hidden_grad(const NodeSubgraph& sub, const HiddenGraph& hidden, int p);

/// Kernel features of one expert before its transform: for each hidden graph,
/// width() values (concat: lambda_p K_p per step; sum: sum_p lambda_p K_p;
/// single: lambda_P K_P), hidden-graph-major.
Vector kernel_features(const KernelOperand& op, std::span<const HiddenGraph> expert, const KernelConfig& cfg);

/// Expert representation: transform(kernel_features(...)).
Vector expert_embed(const NodeSubgraph& sub, std::span<const HiddenGraph> expert, const KernelConfig& cfg,
                    const std::function<Vector(const Vector&)>& transform);

/// Versioned text record: "MOSE-HIDDEN-GRAPH 1", s, f, row-major W, row-major Z.
void write_hidden_graph(std::ostream& out, const HiddenGraph& hg);
HiddenGraph read_hidden_graph(std::istream& in);

/// Graphviz rendering of the effective adjacency. Edges with weight below
/// `prune_threshold` are dropped; pen width grows with weight.
std::string hidden_graph_dot(const HiddenGraph& hg, double prune_threshold = 0.01, const std::string& name = "hidden");

}  // namespace mose
