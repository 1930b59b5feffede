#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mose/graph.hpp"

namespace mose {

/// Exact canonical code of a vertex-colored, optionally rooted graph.
///
/// Two inputs receive equal codes iff they are isomorphic by a map that
/// preserves colors (and sends root to root). Nodes are first split into
/// cells by color-refinement, then every ordering that respects the cells is
/// tried and the lexicographically smallest adjacency code wins. Throws
/// ResourceError if the number of candidate orderings exceeds `search_budget`.
std::string canonical_form(const Graph& g, std::span<const int> colors = {}, std::optional<NodeId> root = std::nullopt,
                           std::uint64_t search_budget = 5'000'000);

bool isomorphic(const Graph& a, const Graph& b);

/// All pairwise non-isomorphic simple graphs on exactly `n` nodes (n <= 7),
/// ordered by edge count and then canonical code.
std::vector<Graph> all_graphs(NodeId n);

}  // namespace mose
