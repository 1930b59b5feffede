#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mose {

using NodeId = std::int32_t;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Immutable simple undirected graph.
///
/// Adjacency is CSR with sorted neighbor lists; every undirected edge is stored
/// in both directions. Node features are a dense row-major n x f matrix.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an undirected edge list. Duplicate edges (in either
  /// orientation) are merged. Throws InvalidArgument on out-of-range ids or
  /// self-loops, or if `features` has a row count other than `node_count`.
  /// An empty `features` matrix means "no features" (n x 0).
  static Graph from_edges(NodeId node_count, std::span<const std::pair<NodeId, NodeId>> edges,
                          Matrix features = Matrix(), std::optional<int> graph_label = std::nullopt,
                          std::vector<int> node_labels = {});

  NodeId node_count() const noexcept { return static_cast<NodeId>(offsets_.size()) - 1; }
  std::int64_t edge_count() const noexcept { return static_cast<std::int64_t>(neighbors_.size()) / 2; }
  int degree(NodeId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  int max_degree() const noexcept;

  std::span<const NodeId> neighbors(NodeId v) const noexcept {
    return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
  }
  bool has_edge(NodeId u, NodeId v) const noexcept;

  std::span<const std::int32_t> offsets() const noexcept { return offsets_; }
  std::span<const NodeId> neighbor_list() const noexcept { return neighbors_; }

  /// Undirected edges with u < v, in ascending (u, v) order.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  const Matrix& features() const noexcept { return features_; }
  int feature_dim() const noexcept { return static_cast<int>(features_.cols()); }

  std::optional<int> graph_label() const noexcept { return graph_label_; }
  const std::vector<int>& node_labels() const noexcept { return node_labels_; }

  Graph with_features(Matrix features) const;
  Graph with_graph_label(std::optional<int> label) const;
  Graph with_node_labels(std::vector<int> labels) const;

  /// Graph with nodes renamed by `perm` (old id v becomes perm[v]).
  Graph relabeled(std::span<const NodeId> perm) const;

  /// Dense 0/1 adjacency matrix.
  Matrix adjacency_matrix() const;

 private:
  std::vector<std::int32_t> offsets_{0};
  std::vector<NodeId> neighbors_;
  Matrix features_;
  std::optional<int> graph_label_;
  std::vector<int> node_labels_;
};

/// Induced subgraph around a center node, with the local-to-parent id map.
/// The center is always local node 0.
struct NodeSubgraph {
  NodeId center = 0;
  Graph graph;
  std::vector<NodeId> parent_ids;
};

/// Vertex-induced subgraph on `nodes` (first element is the center). Local
/// ordering follows `nodes`; features are copied row-wise.
NodeSubgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

/// Direct (tensor) product. Node (u, u') maps to u * |V(h)| + u'. Structure only.
Graph direct_product(const Graph& g, const Graph& h);

/// One-hot degree encoding of width max_degree + 1; larger degrees clamp to the
/// last bucket.
Matrix degree_features(const Graph& g, int max_degree);

/// Convenience constructors used by tests, generators and the WL corpus.
namespace shapes {
Graph path(NodeId n);
Graph cycle(NodeId n);
Graph star(NodeId leaves);
Graph complete(NodeId n);
Graph empty(NodeId n);
Graph disjoint_union(const Graph& a, const Graph& b);
}  // namespace shapes

/// Nodes reachable from `v` within `radius` hops, in BFS order starting at v.
std::vector<NodeId> ball(const Graph& g, NodeId v, int radius);

bool is_connected(const Graph& g);

}  // namespace mose
