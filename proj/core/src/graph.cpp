#include "mose/graph.hpp"

#include <algorithm>
#include <deque>
#include <string>

#include "mose/error.hpp"

namespace mose {

Graph Graph::from_edges(NodeId node_count, std::span<const std::pair<NodeId, NodeId>> edges, Matrix features,
                        std::optional<int> graph_label, std::vector<int> node_labels) {
  if (node_count < 0) throw InvalidArgument("negative node count");
  if (features.size() == 0 && features.rows() != node_count) features.resize(node_count, 0);
  if (features.rows() != node_count)
    throw InvalidArgument("feature rows (" + std::to_string(features.rows()) + ") != node count (" +
                          std::to_string(node_count) + ")");
  if (!node_labels.empty() && static_cast<NodeId>(node_labels.size()) != node_count)
    throw InvalidArgument("node label count != node count");

  std::vector<std::pair<NodeId, NodeId>> arcs;
  arcs.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= node_count || v >= node_count)
      throw InvalidArgument("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range");
    if (u == v) throw InvalidArgument("self-loop at node " + std::to_string(u));
    arcs.emplace_back(u, v);
    arcs.emplace_back(v, u);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  Graph g;
  g.offsets_.assign(static_cast<std::size_t>(node_count) + 1, 0);
  for (auto [u, v] : arcs) ++g.offsets_[u + 1];
  for (NodeId v = 0; v < node_count; ++v) g.offsets_[v + 1] += g.offsets_[v];
  g.neighbors_.reserve(arcs.size());
  for (auto [u, v] : arcs) g.neighbors_.push_back(v);
  g.features_ = std::move(features);
  g.graph_label_ = graph_label;
  g.node_labels_ = std::move(node_labels);
  return g;
}

int Graph::max_degree() const noexcept {
  int best = 0;
  for (NodeId v = 0; v < node_count(); ++v) best = std::max(best, degree(v));
  return best;
}

bool Graph::has_edge(NodeId u, NodeId v) const noexcept {
  if (u < 0 || u >= node_count()) return false;
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<NodeId, NodeId>> Graph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(neighbors_.size() / 2);
  for (NodeId u = 0; u < node_count(); ++u)
    for (NodeId v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

Graph Graph::with_features(Matrix features) const {
  if (features.rows() != node_count()) throw InvalidArgument("feature rows != node count");
  Graph g = *this;
  g.features_ = std::move(features);
  return g;
}

Graph Graph::with_graph_label(std::optional<int> label) const {
  Graph g = *this;
  g.graph_label_ = label;
  return g;
}

Graph Graph::with_node_labels(std::vector<int> labels) const {
  if (!labels.empty() && static_cast<NodeId>(labels.size()) != node_count())
    throw InvalidArgument("node label count != node count");
  Graph g = *this;
  g.node_labels_ = std::move(labels);
  return g;
}

Graph Graph::relabeled(std::span<const NodeId> perm) const {
  const NodeId n = node_count();
  if (static_cast<NodeId>(perm.size()) != n) throw InvalidArgument("permutation size != node count");
  std::vector<std::pair<NodeId, NodeId>> e;
  for (auto [u, v] : edges()) e.emplace_back(perm[u], perm[v]);
  Matrix x(n, features_.cols());
  for (NodeId v = 0; v < n; ++v) x.row(perm[v]) = features_.row(v);
  std::vector<int> labels;
  if (!node_labels_.empty()) {
    labels.resize(n);
    for (NodeId v = 0; v < n; ++v) labels[perm[v]] = node_labels_[v];
  }
  return from_edges(n, e, std::move(x), graph_label_, std::move(labels));
}

Matrix Graph::adjacency_matrix() const {
  Matrix a = Matrix::Zero(node_count(), node_count());
  for (NodeId u = 0; u < node_count(); ++u)
    for (NodeId v : neighbors(u)) a(u, v) = 1.0;
  return a;
}

NodeSubgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  if (nodes.empty()) throw InvalidArgument("induced_subgraph: empty node set");
  const NodeId n = g.node_count();
  std::vector<NodeId> local(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    NodeId v = nodes[i];
    if (v < 0 || v >= n) throw InvalidArgument("induced_subgraph: node id " + std::to_string(v) + " out of range");
    if (local[v] != -1) throw InvalidArgument("induced_subgraph: duplicate node id " + std::to_string(v));
    local[v] = static_cast<NodeId>(i);
  }
  std::vector<std::pair<NodeId, NodeId>> e;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (NodeId w : g.neighbors(nodes[i]))
      if (local[w] > static_cast<NodeId>(i)) e.emplace_back(static_cast<NodeId>(i), local[w]);

  const auto k = static_cast<NodeId>(nodes.size());
  Matrix x(k, g.feature_dim());
  for (NodeId i = 0; i < k; ++i) x.row(i) = g.features().row(nodes[i]);
  std::vector<int> labels;
  if (!g.node_labels().empty()) {
    labels.reserve(k);
    for (NodeId v : nodes) labels.push_back(g.node_labels()[v]);
  }
  NodeSubgraph sub;
  sub.center = 0;
  sub.graph = Graph::from_edges(k, e, std::move(x), std::nullopt, std::move(labels));
  sub.parent_ids.assign(nodes.begin(), nodes.end());
  return sub;
}

Graph direct_product(const Graph& g, const Graph& h) {
  const NodeId n = g.node_count();
  const NodeId m = h.node_count();
  std::vector<std::pair<NodeId, NodeId>> e;
  e.reserve(static_cast<std::size_t>(g.edge_count() * h.edge_count() * 2));
  // Each pair of undirected factor edges {u,v} x {u',v'} yields two product edges.
  for (auto [u, v] : g.edges())
    for (auto [a, b] : h.edges()) {
      e.emplace_back(u * m + a, v * m + b);
      e.emplace_back(u * m + b, v * m + a);
    }
  return Graph::from_edges(n * m, e);
}

Matrix degree_features(const Graph& g, int max_degree) {
  if (max_degree < 0) throw InvalidArgument("degree_features: negative cap");
  Matrix x = Matrix::Zero(g.node_count(), max_degree + 1);
  for (NodeId v = 0; v < g.node_count(); ++v) x(v, std::min(g.degree(v), max_degree)) = 1.0;
  return x;
}

namespace shapes {

Graph path(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edges(n, e);
}

Graph cycle(NodeId n) {
  if (n < 3) throw InvalidArgument("cycle needs at least 3 nodes");
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, e);
}

Graph star(NodeId leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Graph::from_edges(leaves + 1, e);
}

Graph complete(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

Graph empty(NodeId n) { return Graph::from_edges(n, {}); }

Graph disjoint_union(const Graph& a, const Graph& b) {
  const NodeId na = a.node_count();
  auto e = a.edges();
  for (auto [u, v] : b.edges()) e.emplace_back(u + na, v + na);
  Matrix x;
  if (a.feature_dim() == b.feature_dim()) {
    x.resize(na + b.node_count(), a.feature_dim());
    x << a.features(), b.features();
  }
  return Graph::from_edges(na + b.node_count(), e, std::move(x));
}

}  // namespace shapes

std::vector<NodeId> ball(const Graph& g, NodeId v, int radius) {
  std::vector<int> dist(static_cast<std::size_t>(g.node_count()), -1);
  std::vector<NodeId> order{v};
  dist[v] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    NodeId u = order[head];
    if (dist[u] == radius) continue;
    for (NodeId w : g.neighbors(u))
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        order.push_back(w);
      }
  }
  return order;
}

bool is_connected(const Graph& g) {
  if (g.node_count() == 0) return true;
  return static_cast<NodeId>(ball(g, 0, g.node_count()).size()) == g.node_count();
}

}  // namespace mose
