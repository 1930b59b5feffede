#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mose/graph.hpp"
#include "mose/rng.hpp"

namespace mose {

/// Node sequence of an l-step walk (l + 1 entries).
using RandomWalk = std::vector<NodeId>;

/// First-occurrence relabeling of a walk: entry i is the rank of walk[i]
/// among the distinct nodes in order of first appearance.
using AnonymousWalk = std::vector<int>;

/// Multiset of anonymous walks.
using PatternCounts = std::map<AnonymousWalk, std::uint64_t>;

struct WalkConfig {
  int walk_length = 4;     ///< steps per walk (l)
  int walks_per_node = 20; ///< n_w
  int pattern_budget = 8;  ///< k_walk
  int subgraph_cap = 64;   ///< max nodes in an extracted subgraph
  std::uint64_t seed = 0;

  void validate() const;
};

/// Samples `walks_per_node` uniform random walks of `walk_length` steps from v.
/// An isolated v yields no walks.
std::vector<RandomWalk> sample_walks(const Graph& g, NodeId v, const WalkConfig& cfg, Rng& rng);

AnonymousWalk to_anonymous(std::span<const NodeId> walk);

/// True iff `pattern` starts at 0 and never skips a fresh index.
bool is_valid_pattern(std::span<const int> pattern);

/// The k most frequent patterns; ties go to the lexicographically smaller pattern.
std::vector<AnonymousWalk> top_patterns(const PatternCounts& counts, int k);

/// Induces {v} plus every node of a walk whose pattern is in `patterns`
/// (sorted). Nodes are ranked by earliest step of appearance, then by walk
/// order, and only the first `cap` are kept, which preserves connectivity. No
/// match gives the singleton subgraph.
NodeSubgraph extract_subgraph(const Graph& g, NodeId v, std::span<const RandomWalk> walks,
                              std::span<const AnonymousWalk> patterns, int cap = 64);

/// Exact multiset of anonymous patterns over all length-l walks from v.
/// Throws ResourceError if the walk count exceeds `budget`.
PatternCounts enumerate_anonymous_walks(const Graph& g, NodeId v, int l, std::uint64_t budget = 10'000'000);

/// Number of length-l walks starting at v (row sum of A^l), saturating at
/// UINT64_MAX.
std::uint64_t count_walks_from(const Graph& g, NodeId v, int l);

/// True iff the normalized exhaustive length-l anonymous walk distributions
/// from (g, v) and (h, w) differ; compared with exact integer arithmetic.
bool walk_distributions_distinguish(const Graph& g, NodeId v, const Graph& h, NodeId w, int l,
                                    std::uint64_t budget = 10'000'000);

/// Result of the two-pass extraction on one graph.
struct Extraction {
  PatternCounts counts;
  std::vector<AnonymousWalk> patterns;
  std::vector<NodeSubgraph> subgraphs;  ///< one per node, center = that node
  int singleton_count = 0;              ///< nodes whose walks matched no pattern
};

/// Samples walks for every node (substream keyed by (seed, stream_id, node)),
/// counts patterns globally, keeps the top `pattern_budget`, and extracts one
/// subgraph per node.
Extraction extract_all(const Graph& g, const WalkConfig& cfg, std::uint64_t stream_id, int threads = 1);

/// On-disk record of extracted subgraphs for a whole dataset.
struct SubgraphCache {
  static constexpr const char* magic = "MOSE-SUBGRAPH-CACHE";
  static constexpr int version = 1;

  std::string dataset;
  WalkConfig config;
  /// parent ids per node per graph; entry [g][v] starts with v.
  std::vector<std::vector<std::vector<NodeId>>> members;

  void write(const std::filesystem::path& path) const;
  static SubgraphCache read(const std::filesystem::path& path);

  /// Rebuilds the subgraphs of graph `index` against its parent graph.
  std::vector<NodeSubgraph> subgraphs(const Graph& g, std::size_t index) const;
};

}  // namespace mose
