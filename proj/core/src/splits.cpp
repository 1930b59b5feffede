#include <algorithm>
#include <cmath>
#include <numeric>

#include "mose/data_io.hpp"
#include "mose/error.hpp"
#include "mose/rng.hpp"

namespace mose {

SplitPlan make_folds(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("make_folds: k must be at least 2");
  if (ds.task != TaskKind::graph_level) throw InvalidArgument("make_folds: graph-level dataset required");
  if (static_cast<int>(ds.graphs.size()) < k) throw InvalidArgument("make_folds: fewer graphs than folds");

  SplitPlan plan;
  plan.kind = SplitKind::k_fold;
  plan.seed = seed;
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.class_count));
  for (int i = 0; i < static_cast<int>(ds.graphs.size()); ++i) by_class[ds.graphs[i].graph_label().value()].push_back(i);

  Rng rng = make_rng(seed, {0x5f0fULL});
  std::vector<std::vector<int>> test(static_cast<std::size_t>(k));
  std::size_t next = 0;
  for (int c = 0; c < ds.class_count; ++c) {
    auto& members = by_class[c];
    if (!members.empty() && static_cast<int>(members.size()) < k)
      plan.warnings.push_back("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                              " members for " + std::to_string(k) + " folds; stratification is degenerate");
    std::shuffle(members.begin(), members.end(), rng);
    for (int idx : members) test[next++ % k].push_back(idx);
  }
  for (int f = 0; f < k; ++f) {
    Fold fold;
    fold.test = test[f];
    std::sort(fold.test.begin(), fold.test.end());
    for (int g = 0; g < k; ++g)
      if (g != f) fold.train.insert(fold.train.end(), test[g].begin(), test[g].end());
    std::sort(fold.train.begin(), fold.train.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

SplitPlan make_node_splits(const Dataset& ds, std::array<double, 3> ratios, std::uint64_t seed) {
  if (ds.task != TaskKind::node_level) throw InvalidArgument("make_node_splits: node-level dataset required");
  for (double r : ratios)
    if (r < 0.0) throw InvalidArgument("make_node_splits: negative ratio");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw InvalidArgument("make_node_splits: ratios must sum to 1");

  const auto& labels = ds.graphs.at(0).node_labels();
  const auto n = labels.size();
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.class_count));
  for (std::size_t v = 0; v < n; ++v)
    if (labels[v] >= 0) by_class[labels[v]].push_back(static_cast<int>(v));
  for (int c = 0; c < ds.class_count; ++c)
    if (by_class[c].empty()) throw InvalidArgument("make_node_splits: class " + std::to_string(c) + " is empty");

  SplitPlan plan;
  plan.kind = SplitKind::masks;
  plan.seed = seed;
  plan.masks.train.assign(n, 0);
  plan.masks.val.assign(n, 0);
  plan.masks.test.assign(n, 0);
  std::array<std::vector<std::uint8_t>*, 3> parts = {&plan.masks.train, &plan.masks.val, &plan.masks.test};

  // Part sizes come from the labeled total (floor, then leftovers to train,
  // val, test in turn). Stratification: each class is shuffled and its i-th
  // member gets rank (i + 0.5) / size; filling parts in rank order gives every
  // class close to its proportional share.
  Rng rng = make_rng(seed, {0x5111ULL});
  struct Ranked {
    double rank;
    int cls;
    int node;
  };
  std::vector<Ranked> order;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i)
      order.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(members.size()), static_cast<int>(c),
                       members[i]});
  }
  std::sort(order.begin(), order.end(),
            [](const Ranked& a, const Ranked& b) { return a.rank != b.rank ? a.rank < b.rank : a.cls < b.cls; });

  const std::size_t labeled = order.size();
  std::array<std::size_t, 3> take{};
  std::size_t used = 0;
  for (int p = 0; p < 3; ++p) {
    take[p] = static_cast<std::size_t>(std::floor(ratios[p] * static_cast<double>(labeled) + 1e-9));
    used += take[p];
  }
  for (int p = 0; used < labeled; p = (p + 1) % 3)
    if (ratios[p] > 0.0) {
      ++take[p];
      ++used;
    }
  std::size_t pos = 0;
  for (int p = 0; p < 3; ++p)
    for (std::size_t i = 0; i < take[p]; ++i) (*parts[p])[order[pos++].node] = 1;
  return plan;
}

}  // namespace mose
