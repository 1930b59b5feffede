#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "mose/graph.hpp"
#include "mose/moe.hpp"

namespace mose {

struct Coloring {
  std::vector<int> colors;
  std::map<int, int> histogram;  ///< color -> node count
  int rounds = 0;

  int class_count() const noexcept { return static_cast<int>(histogram.size()); }
};

/// Deterministic subgraph extraction for SWL. `ego` takes the radius-h ball;
/// `anonymous_walk` keeps the nodes of every length-l walk from v whose
/// anonymous pattern is among the graph's top `pattern_budget` patterns
/// (counted by exhaustive enumeration, so no sampling is involved).
struct SwlPolicy {
  enum class Kind { ego, anonymous_walk };
  Kind kind = Kind::ego;
  int radius = 1;
  int walk_length = 3;
  int pattern_budget = 8;
  int cap = 8;  ///< canonicalization limit on subgraph size

  static SwlPolicy ego(int h) { return {Kind::ego, h}; }
  static SwlPolicy anonymous(int l, int k) { return {Kind::anonymous_walk, 1, l, k}; }

  std::vector<std::vector<NodeId>> subgraphs(const Graph& g) const;
};

/// 1-WL on several graphs at once with shared color ids, so histograms are
/// directly comparable. `init` (optional) holds one initial coloring per graph.
std::vector<Coloring> wl1_refine(std::span<const Graph> graphs, std::span<const std::vector<int>> init = {});
Coloring wl1_refine(const Graph& g, const std::vector<int>* init = nullptr);

/// SWL with hash = canonical form of the colored rooted subgraph.
std::vector<Coloring> swl_refine(std::span<const Graph> graphs, const SwlPolicy& policy,
                                 std::span<const std::vector<int>> init = {});
Coloring swl_refine(const Graph& g, const SwlPolicy& policy, const std::vector<int>* init = nullptr);

enum class Refiner { wl1, swl };

/// True iff the stable colorings of the two graphs have different histograms.
bool distinguish(const Graph& a, const Graph& b, Refiner refiner, const SwlPolicy& policy = SwlPolicy::ego(1));

/// Prepared nodes for MoSE under a policy; features default to degree one-hot
/// of width `feature_dim` when the graph has none.
std::vector<PreparedNode> prepare_policy_nodes(const Graph& g, const SwlPolicy& policy, int feature_dim);

/// Eval-mode readout embeddings differ by more than `tolerance` (max norm).
bool mose_distinguish(const Graph& a, const Graph& b, const MoseModel& model, const SwlPolicy& policy,
                      double tolerance = 1e-8);

/// Starting 1-WL from the stable SWL coloring produces no further split.
bool lemma1_check(const Graph& g, const SwlPolicy& policy);

struct PairRecord {
  int id = 0;
  int first = 0;   ///< index into the graph list
  int second = 0;
  bool wl1 = false;
  bool swl = false;
  int mose_separations = 0;  ///< random initializations that separated the pair
  int mose_trials = 0;
};

/// Unordered pairs of graphs with equal node count.
std::vector<PairRecord> equal_size_pairs(std::span<const Graph> graphs);

/// CSV: pair_id,first,second,nodes,wl1_distinguished,swl_distinguished,
/// mose_distinguished,mose_rate,swl_superset_ok,mose_agrees.
void write_pair_report(std::ostream& out, std::span<const Graph> graphs, std::span<const PairRecord> pairs);

}  // namespace mose
