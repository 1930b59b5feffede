#include "mose/canonical.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "mose/error.hpp"

namespace mose {
namespace {

// Iterated neighbor-multiset refinement with canonical renumbering. The
// returned classes depend only on the isomorphism type of the colored input.
std::vector<int> refine_cells(const Graph& g, std::vector<int> cls) {
  const NodeId n = g.node_count();
  int count = cls.empty() ? 0 : *std::max_element(cls.begin(), cls.end()) + 1;
  while (true) {
    std::vector<std::pair<int, std::vector<int>>> sig(n);
    for (NodeId v = 0; v < n; ++v) {
      sig[v].first = cls[v];
      for (NodeId w : g.neighbors(v)) sig[v].second.push_back(cls[w]);
      std::sort(sig[v].second.begin(), sig[v].second.end());
    }
    auto uniq = sig;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<int> next(n);
    for (NodeId v = 0; v < n; ++v)
      next[v] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), sig[v]) - uniq.begin());
    const int next_count = static_cast<int>(uniq.size());
    cls = std::move(next);
    if (next_count == count) return cls;
    count = next_count;
  }
}

}  // namespace

std::string canonical_form(const Graph& g, std::span<const int> colors, std::optional<NodeId> root,
                           std::uint64_t search_budget) {
  const NodeId n = g.node_count();
  if (!colors.empty() && static_cast<NodeId>(colors.size()) != n)
    throw InvalidArgument("canonical_form: color count != node count");

  // Initial keys: (root marker, color), renumbered in sorted order.
  std::vector<std::pair<int, int>> key(n);
  for (NodeId v = 0; v < n; ++v)
    key[v] = {root && *root == v ? 0 : 1, colors.empty() ? 0 : colors[v]};
  auto uniq = key;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<int> cls(n);
  for (NodeId v = 0; v < n; ++v)
    cls[v] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), key[v]) - uniq.begin());
  cls = refine_cells(g, std::move(cls));

  const int cell_count = n == 0 ? 0 : *std::max_element(cls.begin(), cls.end()) + 1;
  std::vector<std::vector<NodeId>> cells(cell_count);
  for (NodeId v = 0; v < n; ++v) cells[cls[v]].push_back(v);

  std::uint64_t orderings = 1;
  for (const auto& c : cells)
    for (std::size_t k = 2; k <= c.size(); ++k) {
      orderings *= k;
      if (orderings > search_budget)
        throw ResourceError("canonical_form: search budget exceeded (" + std::to_string(n) + " nodes)");
    }

  std::string header = std::to_string(n) + ';';
  for (const auto& c : cells) {
    const auto& k = key[c.front()];
    header += std::to_string(k.first) + ',' + std::to_string(k.second) + 'x' + std::to_string(c.size()) + ' ';
  }
  header += ';';

  for (auto& c : cells) std::sort(c.begin(), c.end());
  std::vector<NodeId> order;
  order.reserve(n);
  std::string best;
  std::string code(static_cast<std::size_t>(n) * (n - 1 < 0 ? 0 : n - 1) / 2, '0');

  auto emit = [&] {
    std::size_t idx = 0;
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j) code[idx++] = g.has_edge(order[i], order[j]) ? '1' : '0';
    if (best.empty() || code < best) best = code;
  };
  // Odometer over the per-cell permutations.
  std::function<void(std::size_t)> rec = [&](std::size_t ci) {
    if (ci == cells.size()) {
      order.clear();
      for (const auto& c : cells) order.insert(order.end(), c.begin(), c.end());
      emit();
      return;
    }
    auto& c = cells[ci];
    std::sort(c.begin(), c.end());
    do {
      rec(ci + 1);
    } while (std::next_permutation(c.begin(), c.end()));
  };
  if (n > 0) rec(0);
  return header + best;
}

bool isomorphic(const Graph& a, const Graph& b) {
  if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) return false;
  return canonical_form(a) == canonical_form(b);
}

std::vector<Graph> all_graphs(NodeId n) {
  if (n < 0 || n > 7) throw InvalidArgument("all_graphs: n must be in [0, 7]");
  std::vector<std::pair<NodeId, NodeId>> slots;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) slots.emplace_back(i, j);
  std::map<std::pair<std::size_t, std::string>, Graph> seen;
  const std::uint64_t total = std::uint64_t{1} << slots.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    std::vector<std::pair<NodeId, NodeId>> e;
    for (std::size_t b = 0; b < slots.size(); ++b)
      if (mask >> b & 1U) e.push_back(slots[b]);
    Graph g = Graph::from_edges(n, e);
    auto code = canonical_form(g);
    seen.try_emplace({e.size(), std::move(code)}, std::move(g));
  }
  std::vector<Graph> out;
  out.reserve(seen.size());
  for (auto& [k, g] : seen) out.push_back(std::move(g));
  return out;
}

}  // namespace mose
