#include "mose/walks.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "mose/error.hpp"
#include "mose/parallel.hpp"

namespace mose {

void WalkConfig::validate() const {
  if (walk_length < 1) throw InvalidArgument("walk length must be >= 1");
  if (walks_per_node < 1) throw InvalidArgument("walks per node must be >= 1");
  if (pattern_budget < 1) throw InvalidArgument("pattern budget must be >= 1");
  if (subgraph_cap < 1) throw InvalidArgument("subgraph cap must be >= 1");
}

std::vector<RandomWalk> sample_walks(const Graph& g, NodeId v, const WalkConfig& cfg, Rng& rng) {
  if (v < 0 || v >= g.node_count()) throw InvalidArgument("sample_walks: node out of range");
  std::vector<RandomWalk> walks;
  if (g.degree(v) == 0) return walks;
  walks.reserve(static_cast<std::size_t>(cfg.walks_per_node));
  for (int w = 0; w < cfg.walks_per_node; ++w) {
    RandomWalk walk;
    walk.reserve(static_cast<std::size_t>(cfg.walk_length) + 1);
    walk.push_back(v);
    NodeId cur = v;
    for (int step = 0; step < cfg.walk_length; ++step) {
      auto nb = g.neighbors(cur);
      cur = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(rng)];
      walk.push_back(cur);
    }
    walks.push_back(std::move(walk));
  }
  return walks;
}

AnonymousWalk to_anonymous(std::span<const NodeId> walk) {
  AnonymousWalk pattern;
  pattern.reserve(walk.size());
  std::vector<NodeId> seen;
  for (NodeId v : walk) {
    auto it = std::find(seen.begin(), seen.end(), v);
    if (it == seen.end()) {
      pattern.push_back(static_cast<int>(seen.size()));
      seen.push_back(v);
    } else {
      pattern.push_back(static_cast<int>(it - seen.begin()));
    }
  }
  return pattern;
}

bool is_valid_pattern(std::span<const int> pattern) {
  int fresh = 0;
  for (int x : pattern) {
    if (x < 0 || x > fresh) return false;
    if (x == fresh) ++fresh;
  }
  return true;
}

std::vector<AnonymousWalk> top_patterns(const PatternCounts& counts, int k) {
  std::vector<std::pair<std::uint64_t, const AnonymousWalk*>> ranked;
  ranked.reserve(counts.size());
  for (const auto& [pattern, count] : counts) ranked.emplace_back(count, &pattern);
  // std::map iterates patterns in ascending order, so a stable sort on count
  // leaves ties lexicographically ordered.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<AnonymousWalk> out;
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(i) < k; ++i) out.push_back(*ranked[i].second);
  return out;
}

NodeSubgraph extract_subgraph(const Graph& g, NodeId v, std::span<const RandomWalk> walks,
                              std::span<const AnonymousWalk> patterns, int cap) {
  if (cap < 1) throw InvalidArgument("extract_subgraph: cap must be >= 1");
  std::set<AnonymousWalk> wanted(patterns.begin(), patterns.end());
  // (earliest step, walk index) per node.
  std::vector<std::pair<NodeId, std::pair<int, int>>> rank;
  std::vector<int> slot(static_cast<std::size_t>(g.node_count()), -1);
  slot[v] = 0;
  rank.push_back({v, {0, -1}});
  for (std::size_t w = 0; w < walks.size(); ++w) {
    const auto& walk = walks[w];
    if (walk.empty() || walk.front() != v) throw InvalidArgument("extract_subgraph: walk does not start at center");
    if (!wanted.contains(to_anonymous(walk))) continue;
    for (std::size_t step = 0; step < walk.size(); ++step) {
      const NodeId u = walk[step];
      const std::pair<int, int> key{static_cast<int>(step), static_cast<int>(w)};
      if (slot[u] < 0) {
        slot[u] = static_cast<int>(rank.size());
        rank.push_back({u, key});
      } else if (key < rank[slot[u]].second) {
        rank[slot[u]].second = key;
      }
    }
  }
  std::stable_sort(rank.begin() + 1, rank.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<NodeId> nodes;
  for (std::size_t i = 0; i < rank.size() && static_cast<int>(i) < cap; ++i) nodes.push_back(rank[i].first);
  return induced_subgraph(g, nodes);
}

std::uint64_t count_walks_from(const Graph& g, NodeId v, int l) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> cur(static_cast<std::size_t>(g.node_count()), 0), next(cur.size());
  cur[v] = 1;
  for (int step = 0; step < l; ++step) {
    std::fill(next.begin(), next.end(), 0);
    for (NodeId u = 0; u < g.node_count(); ++u) {
      if (!cur[u]) continue;
      for (NodeId w : g.neighbors(u)) next[w] = next[w] > kMax - cur[u] ? kMax : next[w] + cur[u];
    }
    std::swap(cur, next);
  }
  std::uint64_t total = 0;
  for (auto c : cur) total = total > kMax - c ? kMax : total + c;
  return total;
}

PatternCounts enumerate_anonymous_walks(const Graph& g, NodeId v, int l, std::uint64_t budget) {
  if (v < 0 || v >= g.node_count()) throw InvalidArgument("enumerate_anonymous_walks: node out of range");
  if (l < 0) throw InvalidArgument("enumerate_anonymous_walks: negative length");
  const auto total = count_walks_from(g, v, l);
  if (total > budget)
    throw ResourceError("enumerate_anonymous_walks: " + std::to_string(total) + " walks exceed budget " +
                        std::to_string(budget));
  PatternCounts counts;
  AnonymousWalk pattern{0};
  std::vector<NodeId> seen{v};
  // Depth-first over walks, keeping the pattern and first-visit list in sync.
  auto dfs = [&](auto&& self, NodeId cur, int depth) -> void {
    if (depth == l) {
      ++counts[pattern];
      return;
    }
    for (NodeId w : g.neighbors(cur)) {
      auto it = std::find(seen.begin(), seen.end(), w);
      const bool fresh = it == seen.end();
      pattern.push_back(fresh ? static_cast<int>(seen.size()) : static_cast<int>(it - seen.begin()));
      if (fresh) seen.push_back(w);
      self(self, w, depth + 1);
      if (fresh) seen.pop_back();
      pattern.pop_back();
    }
  };
  dfs(dfs, v, 0);
  return counts;
}

__extension__ using u128 = unsigned __int128;

bool walk_distributions_distinguish(const Graph& g, NodeId v, const Graph& h, NodeId w, int l,
                                    std::uint64_t budget) {
  const auto a = enumerate_anonymous_walks(g, v, l, budget);
  const auto b = enumerate_anonymous_walks(h, w, l, budget);
  std::uint64_t ta = 0, tb = 0;
  for (const auto& [p, c] : a) ta += c;
  for (const auto& [p, c] : b) tb += c;
  if ((ta == 0) != (tb == 0)) return true;
  if (ta == 0) return false;
  std::set<AnonymousWalk> keys;
  for (const auto& [p, c] : a) keys.insert(p);
  for (const auto& [p, c] : b) keys.insert(p);
  for (const auto& p : keys) {
    const auto ia = a.find(p);
    const auto ib = b.find(p);
    const u128 ca = ia == a.end() ? 0 : ia->second;
    const u128 cb = ib == b.end() ? 0 : ib->second;
    if (ca * tb != cb * ta) return true;
  }
  return false;
}

Extraction extract_all(const Graph& g, const WalkConfig& cfg, std::uint64_t stream_id, int threads) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(g.node_count());
  std::vector<std::vector<RandomWalk>> walks(n);
  std::vector<PatternCounts> local(n);
  parallel_for(n, threads, [&](std::size_t v) {
    Rng rng = make_rng(cfg.seed, {stream_id, static_cast<std::uint64_t>(v)});
    walks[v] = sample_walks(g, static_cast<NodeId>(v), cfg, rng);
    for (const auto& w : walks[v]) ++local[v][to_anonymous(w)];
  });
  Extraction out;
  for (const auto& counts : local)
    for (const auto& [p, c] : counts) out.counts[p] += c;
  out.patterns = top_patterns(out.counts, cfg.pattern_budget);
  auto sorted = out.patterns;
  std::sort(sorted.begin(), sorted.end());
  out.subgraphs.resize(n);
  parallel_for(n, threads, [&](std::size_t v) {
    out.subgraphs[v] = extract_subgraph(g, static_cast<NodeId>(v), walks[v], sorted, cfg.subgraph_cap);
  });
  for (const auto& s : out.subgraphs) out.singleton_count += s.graph.node_count() == 1 ? 1 : 0;
  return out;
}

}  // namespace mose
