#include "mose/wl.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <string>

#include "mose/canonical.hpp"
#include "mose/error.hpp"
#include "mose/walks.hpp"

namespace mose {

namespace {

// Re-indexes per-node signatures to contiguous ids in sorted signature
// order, shared across all graphs.
template <typename Sig>
std::vector<std::vector<int>> reindex(const std::vector<std::vector<Sig>>& sigs) {
  std::map<Sig, int> ids;
  for (const auto& g : sigs)
    for (const auto& s : g) ids.emplace(s, 0);
  int next = 0;
  for (auto& [s, id] : ids) id = next++;
  std::vector<std::vector<int>> out(sigs.size());
  for (std::size_t g = 0; g < sigs.size(); ++g) {
    out[g].reserve(sigs[g].size());
    for (const auto& s : sigs[g]) out[g].push_back(ids.at(s));
  }
  return out;
}

std::size_t distinct(const std::vector<std::vector<int>>& colors) {
  std::set<int> all;
  for (const auto& g : colors) all.insert(g.begin(), g.end());
  return all.size();
}

std::vector<std::vector<int>> initial(std::span<const Graph> graphs, std::span<const std::vector<int>> init) {
  if (!init.empty() && init.size() != graphs.size()) throw InvalidArgument("refine: need one initial coloring per graph");
  std::vector<std::vector<int>> raw(graphs.size());
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const auto n = static_cast<std::size_t>(graphs[g].node_count());
    if (init.empty()) {
      raw[g].assign(n, 0);
    } else {
      if (init[g].size() != n) throw InvalidArgument("refine: initial coloring length mismatch");
      raw[g] = init[g];
    }
  }
  return reindex(raw);
}

template <typename SigFn>
std::vector<Coloring> refine(std::span<const Graph> graphs, std::span<const std::vector<int>> init, SigFn signature) {
  auto colors = initial(graphs, init);
  std::size_t classes = distinct(colors);
  int rounds = 0;
  std::size_t total = 0;
  for (const auto& g : graphs) total += static_cast<std::size_t>(g.node_count());
  while (true) {
    using Sig = decltype(signature(std::size_t{0}, colors[0], NodeId{0}));
    std::vector<std::vector<Sig>> sigs(graphs.size());
    for (std::size_t g = 0; g < graphs.size(); ++g)
      for (NodeId v = 0; v < graphs[g].node_count(); ++v) sigs[g].push_back(signature(g, colors[g], v));
    auto next = reindex(sigs);
    ++rounds;
    const std::size_t now = distinct(next);
    colors = std::move(next);
    if (now == classes || static_cast<std::size_t>(rounds) > total) break;
    classes = now;
  }
  std::vector<Coloring> out(graphs.size());
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    out[g].colors = colors[g];
    for (int c : colors[g]) ++out[g].histogram[c];
    out[g].rounds = rounds;
  }
  return out;
}

}  // namespace

std::vector<std::vector<NodeId>> SwlPolicy::subgraphs(const Graph& g) const {
  std::vector<std::vector<NodeId>> out(static_cast<std::size_t>(g.node_count()));
  if (kind == Kind::ego) {
    if (radius < 0) throw InvalidArgument("SWL policy: negative radius");
    for (NodeId v = 0; v < g.node_count(); ++v) out[v] = ball(g, v, radius);
    return out;
  }
  if (walk_length < 1 || pattern_budget < 1) throw InvalidArgument("SWL policy: invalid walk parameters");
  PatternCounts counts;
  for (NodeId v = 0; v < g.node_count(); ++v)
    for (const auto& [p, c] : enumerate_anonymous_walks(g, v, walk_length)) counts[p] += c;
  const auto top = top_patterns(counts, pattern_budget);
  const std::set<AnonymousWalk> keep(top.begin(), top.end());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    std::vector<NodeId> nodes{v};
    std::vector<NodeId> walk{v};
    auto dfs = [&](auto&& self, int depth) -> void {
      if (depth == walk_length) {
        if (keep.count(to_anonymous(walk)))
          for (NodeId u : walk)
            if (std::find(nodes.begin(), nodes.end(), u) == nodes.end()) nodes.push_back(u);
        return;
      }
      for (NodeId w : g.neighbors(walk.back())) {
        walk.push_back(w);
        self(self, depth + 1);
        walk.pop_back();
      }
    };
    dfs(dfs, 0);
    std::sort(nodes.begin() + 1, nodes.end());
    out[v] = std::move(nodes);
  }
  return out;
}

std::vector<Coloring> wl1_refine(std::span<const Graph> graphs, std::span<const std::vector<int>> init) {
  if (graphs.empty()) return {};
  return refine(graphs, init, [&](std::size_t g, const std::vector<int>& c, NodeId v) {
    std::vector<int> sig{c[v]};
    for (NodeId u : graphs[g].neighbors(v)) sig.push_back(c[u]);
    std::sort(sig.begin() + 1, sig.end());
    return sig;
  });
}

Coloring wl1_refine(const Graph& g, const std::vector<int>* init) {
  std::vector<std::vector<int>> i;
  if (init) i.push_back(*init);
  return wl1_refine(std::span<const Graph>(&g, 1), i).front();
}

std::vector<Coloring> swl_refine(std::span<const Graph> graphs, const SwlPolicy& policy,
                                 std::span<const std::vector<int>> init) {
  if (graphs.empty()) return {};
  std::vector<std::vector<NodeSubgraph>> subs(graphs.size());
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    for (const auto& nodes : policy.subgraphs(graphs[g])) {
      if (static_cast<int>(nodes.size()) > policy.cap)
        throw ResourceError("SWL: subgraph of " + std::to_string(nodes.size()) + " nodes exceeds the canonicalization cap " +
                            std::to_string(policy.cap));
      subs[g].push_back(induced_subgraph(graphs[g].with_features(Matrix(graphs[g].node_count(), 0)), nodes));
    }
  }
  return refine(graphs, init, [&](std::size_t g, const std::vector<int>& c, NodeId v) {
    const NodeSubgraph& s = subs[g][static_cast<std::size_t>(v)];
    std::vector<int> local(s.parent_ids.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = c[static_cast<std::size_t>(s.parent_ids[i])];
    return canonical_form(s.graph, local, s.center);
  });
}

Coloring swl_refine(const Graph& g, const SwlPolicy& policy, const std::vector<int>* init) {
  std::vector<std::vector<int>> i;
  if (init) i.push_back(*init);
  return swl_refine(std::span<const Graph>(&g, 1), policy, i).front();
}

bool distinguish(const Graph& a, const Graph& b, Refiner refiner, const SwlPolicy& policy) {
  const std::vector<Graph> pair{a, b};
  const auto c = refiner == Refiner::wl1 ? wl1_refine(pair) : swl_refine(pair, policy);
  return c[0].histogram != c[1].histogram;
}

std::vector<PreparedNode> prepare_policy_nodes(const Graph& g, const SwlPolicy& policy, int feature_dim) {
  Graph base = g;
  if (g.feature_dim() == 0) base = g.with_features(degree_features(g, feature_dim - 1));
  if (base.feature_dim() != feature_dim) throw InvalidArgument("mose_distinguish: feature width mismatch");
  std::vector<PreparedNode> out;
  for (const auto& nodes : policy.subgraphs(base)) out.push_back(prepare_node(induced_subgraph(base, nodes)));
  return out;
}

bool mose_distinguish(const Graph& a, const Graph& b, const MoseModel& model, const SwlPolicy& policy,
                      double tolerance) {
  const int f = model.config().feature_dim;
  const auto na = prepare_policy_nodes(a, policy, f);
  const auto nb = prepare_policy_nodes(b, policy, f);
  if (na.empty() || nb.empty()) return na.size() != nb.size();
  const Vector ha = graph_embedding(model, na);
  const Vector hb = graph_embedding(model, nb);
  return (ha - hb).cwiseAbs().maxCoeff() > tolerance;
}

bool lemma1_check(const Graph& g, const SwlPolicy& policy) {
  const Coloring s = swl_refine(g, policy);
  const Coloring w = wl1_refine(g, &s.colors);
  return w.class_count() == s.class_count();
}

std::vector<PairRecord> equal_size_pairs(std::span<const Graph> graphs) {
  std::vector<PairRecord> out;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    for (std::size_t j = i + 1; j < graphs.size(); ++j)
      if (graphs[i].node_count() == graphs[j].node_count()) {
        PairRecord r;
        r.id = static_cast<int>(out.size());
        r.first = static_cast<int>(i);
        r.second = static_cast<int>(j);
        out.push_back(r);
      }
  return out;
}

void write_pair_report(std::ostream& out, std::span<const Graph> graphs, std::span<const PairRecord> pairs) {
  out << "pair_id,first,second,nodes,wl1_distinguished,swl_distinguished,mose_distinguished,mose_rate,"
         "swl_superset_ok,mose_agrees\n";
  for (const auto& p : pairs) {
    const double rate = p.mose_trials ? static_cast<double>(p.mose_separations) / p.mose_trials : 0.0;
    const bool mose = p.mose_trials && p.mose_separations == p.mose_trials;
    out << p.id << ',' << p.first << ',' << p.second << ',' << graphs[static_cast<std::size_t>(p.first)].node_count()
        << ',' << p.wl1 << ',' << p.swl << ',' << mose << ',' << rate << ',' << (!p.wl1 || p.swl) << ','
        << (!p.swl || mose) << '\n';
  }
}

}  // namespace mose
