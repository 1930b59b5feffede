#include <algorithm>
#include <cmath>
#include <set>

#include "mose/data_io.hpp"
#include "mose/error.hpp"
#include "mose/rng.hpp"

namespace mose {
namespace {

using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

// Preferential attachment on `n` nodes starting from a star on m + 1 nodes;
// node ids are offset by `base`.
void barabasi_albert(NodeId n, int m, NodeId base, Rng& rng, EdgeList& out) {
  std::vector<NodeId> repeated;
  for (NodeId leaf = 1; leaf <= m; ++leaf) {
    out.emplace_back(base, base + leaf);
    repeated.push_back(0);
    repeated.push_back(leaf);
  }
  for (NodeId source = m + 1; source < n; ++source) {
    std::set<NodeId> targets;
    std::uniform_int_distribution<std::size_t> pick(0, repeated.size() - 1);
    while (static_cast<int>(targets.size()) < m) targets.insert(repeated[pick(rng)]);
    for (NodeId t : targets) {
      out.emplace_back(base + source, base + t);
      repeated.push_back(t);
      repeated.push_back(source);
    }
  }
}

enum class Layout { caveman, cycle, grid, ladder, star, tree };

std::vector<std::pair<int, int>> layout_pairs(Layout layout, int c, Rng& rng) {
  std::vector<std::pair<int, int>> p;
  switch (layout) {
    case Layout::caveman:
      for (int i = 0; i < c; ++i)
        for (int j = i + 1; j < c; ++j) p.emplace_back(i, j);
      break;
    case Layout::cycle:
      for (int i = 0; i < c; ++i) p.emplace_back(i, (i + 1) % c);
      break;
    case Layout::grid: {
      const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(c)))));
      const int cols = (c + rows - 1) / rows;
      for (int i = 0; i < c; ++i) {
        if ((i % cols) + 1 < cols && i + 1 < c) p.emplace_back(i, i + 1);
        if (i + cols < c) p.emplace_back(i, i + cols);
      }
      break;
    }
    case Layout::ladder: {
      const int top = (c + 1) / 2;
      for (int i = 0; i + 1 < top; ++i) p.emplace_back(i, i + 1);
      for (int i = top; i + 1 < c; ++i) p.emplace_back(i, i + 1);
      for (int i = top; i < c; ++i) p.emplace_back(i - top, i);
      break;
    }
    case Layout::star:
      for (int i = 1; i < c; ++i) p.emplace_back(0, i);
      break;
    case Layout::tree:
      for (int i = 1; i < c; ++i) p.emplace_back(std::uniform_int_distribution<int>(0, i - 1)(rng), i);
      break;
  }
  return p;
}

struct CommunitySpec {
  int min_communities, max_communities;
  int min_size, max_size;
};

Graph community_graph(Layout layout, const CommunitySpec& spec, int label, Rng& rng) {
  const int c = std::uniform_int_distribution<int>(spec.min_communities, spec.max_communities)(rng);
  std::vector<NodeId> start(static_cast<std::size_t>(c) + 1, 0);
  EdgeList edges;
  for (int i = 0; i < c; ++i) {
    const NodeId size = std::uniform_int_distribution<NodeId>(spec.min_size, spec.max_size)(rng);
    const int m = std::uniform_int_distribution<int>(1, 3)(rng);
    barabasi_albert(size, m, start[i], rng, edges);
    start[i + 1] = start[i] + size;
  }
  const double prob = std::uniform_real_distribution<double>(0.05, 0.15)(rng);
  std::bernoulli_distribution coin(prob);
  for (auto [a, b] : layout_pairs(layout, c, rng)) {
    std::uniform_int_distribution<NodeId> in_a(start[a], start[a + 1] - 1), in_b(start[b], start[b + 1] - 1);
    edges.emplace_back(in_a(rng), in_b(rng));
    for (NodeId u = start[a]; u < start[a + 1]; ++u)
      for (NodeId v = start[b]; v < start[b + 1]; ++v)
        if (coin(rng)) edges.emplace_back(u, v);
  }
  return Graph::from_edges(start[c], edges, Matrix(), label);
}

Dataset generate(const std::string& name, std::span<const Layout> layouts, const CommunitySpec& spec, int count,
                 std::uint64_t seed) {
  const int classes = static_cast<int>(layouts.size());
  if (count < classes) throw InvalidArgument(name + ": count must be at least the class count");
  Dataset ds;
  ds.name = name;
  ds.task = TaskKind::graph_level;
  ds.class_count = classes;
  ds.graphs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i)});
    const int label = i % classes;
    ds.graphs.push_back(community_graph(layouts[label], spec, label, rng));
  }
  int cap = 0;
  for (const auto& g : ds.graphs) cap = std::max(cap, g.max_degree());
  for (auto& g : ds.graphs) g = g.with_features(degree_features(g, cap));
  return ds;
}

}  // namespace

Dataset gen_graph_cycle(int count, std::uint64_t seed) {
  constexpr Layout layouts[] = {Layout::cycle, Layout::tree};
  return generate("GraphCycle", layouts, {8, 15, 10, 40}, count, seed);
}

Dataset gen_graph_five(int count, std::uint64_t seed) {
  constexpr Layout layouts[] = {Layout::caveman, Layout::cycle, Layout::grid, Layout::ladder, Layout::star};
  return generate("GraphFive", layouts, {8, 15, 10, 20}, count, seed);
}

}  // namespace mose
