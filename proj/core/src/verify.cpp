#include "mose/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mose/canonical.hpp"
#include "mose/error.hpp"
#include "mose/kernel.hpp"
#include "mose/moe.hpp"
#include "mose/parallel.hpp"
#include "mose/rng.hpp"
#include "mose/trainer.hpp"
#include "mose/walks.hpp"
#include "mose/wl.hpp"

namespace mose {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects failures from worker threads in a stable order.
class FailureLog {
 public:
  void add(std::size_t key, std::string msg) {
    std::lock_guard<std::mutex> lock(mu_);
    items_.emplace_back(key, std::move(msg));
  }
  std::vector<std::string> sorted() {
    std::sort(items_.begin(), items_.end());
    std::vector<std::string> out;
    for (auto& [k, m] : items_) out.push_back(std::move(m));
    return out;
  }
  std::size_t size() const { return items_.size(); }

 private:
  std::mutex mu_;
  std::vector<std::pair<std::size_t, std::string>> items_;
};

Graph random_graph(Rng& rng, NodeId n, double p) {
  std::bernoulli_distribution edge(p);
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (edge(rng)) e.emplace_back(u, v);
  return Graph::from_edges(n, e);
}

// Random edges under a degree cap, inserted in shuffled order.
Graph random_sparse_graph(Rng& rng, NodeId n, int max_degree, double p) {
  std::vector<std::pair<NodeId, NodeId>> cand;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) cand.emplace_back(u, v);
  std::shuffle(cand.begin(), cand.end(), rng);
  std::bernoulli_distribution keep(p);
  std::vector<int> deg(static_cast<std::size_t>(n), 0);
  std::vector<std::pair<NodeId, NodeId>> e;
  for (auto [u, v] : cand) {
    if (deg[u] >= max_degree || deg[v] >= max_degree || !keep(rng)) continue;
    ++deg[u];
    ++deg[v];
    e.emplace_back(u, v);
  }
  return Graph::from_edges(n, e);
}

std::vector<NodeId> random_permutation(Rng& rng, NodeId n) {
  std::vector<NodeId> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

Matrix one_hot_features(Rng& rng, NodeId n, int f) {
  std::uniform_int_distribution<int> pick(0, f - 1);
  Matrix x = Matrix::Zero(n, f);
  for (NodeId v = 0; v < n; ++v) x(v, pick(rng)) = 1.0;
  return x;
}

Matrix uniform_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Matrix power(const Matrix& a, int p) {
  Matrix out = Matrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < p; ++i) out = (out * a).eval();
  return out;
}

std::string describe(const Graph& g) {
  std::ostringstream out;
  out << "n=" << g.node_count() << " E={";
  bool first = true;
  for (auto [u, v] : g.edges()) {
    out << (first ? "" : ",") << u << '-' << v;
    first = false;
  }
  out << '}';
  return out.str();
}

CheckResult named(int criterion, std::string name) {
  CheckResult r;
  r.criterion = criterion;
  r.name = std::move(name);
  return r;
}

CheckResult finish(CheckResult r, FailureLog& log, bool ok, std::string detail, Clock::time_point t0) {
  r.failures = log.sorted();
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.detail = std::move(detail);
  r.seconds = seconds_since(t0);
  return r;
}

}  // namespace

void print_result(std::ostream& out, const CheckResult& r, std::size_t max_failures) {
  const char* tag = r.status == CheckStatus::pass ? "PASS" : r.status == CheckStatus::skip ? "SKIP" : "FAIL";
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.1f", r.seconds);
  out << tag << " criterion " << r.criterion << " (" << r.name << "): " << r.detail << " [" << secs << " s]\n";
  for (std::size_t i = 0; i < r.failures.size() && i < max_failures; ++i) out << "    " << r.failures[i] << '\n';
  if (r.failures.size() > max_failures) out << "    ... " << r.failures.size() - max_failures << " more\n";
}

CheckResult check_kernel_oracle(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  CheckResult r = named(1, "kernel oracle equivalence");
  std::vector<Graph> corpus;
  for (NodeId n = 1; n <= opts.max_nodes; ++n)
    for (auto& g : all_graphs(n)) corpus.push_back(std::move(g));

  std::vector<std::pair<Graph, Graph>> pairs;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (std::size_t j = i; j < corpus.size(); ++j) pairs.emplace_back(corpus[i], corpus[j]);
  const std::size_t exhaustive = pairs.size();
  Rng rng = make_rng(opts.seed, {0xc1});
  std::uniform_int_distribution<NodeId> size(1, 6);
  std::uniform_real_distribution<double> density(0.2, 0.8);
  for (int i = 0; i < opts.random_pairs; ++i) {
    Graph a = random_graph(rng, size(rng), density(rng));
    Graph b = random_graph(rng, size(rng), density(rng));
    pairs.emplace_back(std::move(a), std::move(b));
  }

  FailureLog log;
  parallel_for(pairs.size(), opts.threads, [&](std::size_t i) {
    const auto& [g, h] = pairs[i];
    for (int p = 1; p <= opts.max_p; ++p) {
      KernelConfig cfg;
      cfg.max_step = p;
      cfg.step_mode = StepMode::sum_over_p;
      cfg.lambdas.assign(static_cast<std::size_t>(p) + 1, 0.0);
      cfg.lambdas[p] = 1.0;
      const double discrete = rwk_discrete(g, h, cfg);
      const std::uint64_t oracle = rwk_oracle(g, h, p);
      if (discrete != static_cast<double>(oracle)) {
        std::ostringstream msg;
        msg << "pair " << i << " p=" << p << ": rwk_discrete=" << discrete << " oracle=" << oracle << " G " << describe(g)
            << " H " << describe(h);
        log.add(i * 16 + static_cast<std::size_t>(p), msg.str());
      }
    }
  });
  std::ostringstream d;
  d << exhaustive << " exhaustive pairs (" << corpus.size() << " graphs, n<=" << opts.max_nodes << ") + "
    << opts.random_pairs << " random pairs, p=1.." << opts.max_p << ", " << log.size() << " mismatches";
  const bool ok = log.size() == 0;
  return finish(std::move(r), log, ok, d.str(), t0);
}

CheckResult check_kernel_identity(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  CheckResult r = named(2, "hidden kernel identity");
  FailureLog log;
  std::vector<double> errors(static_cast<std::size_t>(opts.identity_instances), 0.0);
  parallel_for(errors.size(), opts.threads, [&](std::size_t i) {
    Rng rng = make_rng(opts.seed, {0xc2, i});
    const NodeId n = std::uniform_int_distribution<NodeId>(1, 12)(rng);
    const int f = std::uniform_int_distribution<int>(1, 4)(rng);
    const int s = std::uniform_int_distribution<int>(2, 6)(rng);
    const int p = std::uniform_int_distribution<int>(1, 4)(rng);
    Graph g = random_graph(rng, n, std::uniform_real_distribution<double>(0.1, 0.7)(rng));
    // Non-negative inputs keep every term of the sum non-negative, so the
    // relative comparison is not polluted by cancellation.
    const bool one_hot = (i % 2) == 0;
    g = g.with_features(one_hot ? one_hot_features(rng, n, f) : uniform_matrix(rng, n, f, 0.0, 1.0));
    HiddenGraph hg{uniform_matrix(rng, s, s, -0.5, 1.0), uniform_matrix(rng, s, f, 0.0, 1.0)};
    std::vector<NodeId> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    const NodeSubgraph sub = induced_subgraph(g, all);
    const double fast = rwk_hidden(sub, hg, p);
    const double slow = rwk_diff(g.adjacency_matrix(), g.features(), hg.adjacency(), hg.features, p);
    const double scale = std::max(std::abs(fast), std::abs(slow));
    const double rel = scale == 0.0 ? 0.0 : std::abs(fast - slow) / scale;
    errors[i] = rel;
    if (!(rel <= 1e-10)) {
      std::ostringstream msg;
      msg << "instance " << i << " (n=" << n << " s=" << s << " f=" << f << " p=" << p << "): rwk_hidden=" << fast
          << " rwk_diff=" << slow << " rel=" << rel;
      log.add(i, msg.str());
    }
  });
  const double worst = *std::max_element(errors.begin(), errors.end());
  std::ostringstream d;
  d << opts.identity_instances << " instances, max relative error " << worst << " (tolerance 1e-10)";
  return finish(std::move(r), log, log.size() == 0, d.str(), t0);
}

namespace {

struct ModuleGradOutcome {
  double max_rel = 0.0;
  std::string worst;
};

ModuleGradOutcome module_grad_instance(std::uint64_t seed, std::size_t i) {
  Rng rng = make_rng(seed, {0xc3, i});
  const NodeId n = std::uniform_int_distribution<NodeId>(1, 8)(rng);
  const int f = std::uniform_int_distribution<int>(1, 3)(rng);
  const int s = std::uniform_int_distribution<int>(2, 5)(rng);
  const int p = std::uniform_int_distribution<int>(1, 4)(rng);
  Graph g = random_graph(rng, n, 0.5);
  g = g.with_features(uniform_matrix(rng, n, f, 0.0, 1.0));
  std::vector<NodeId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  const NodeSubgraph sub = induced_subgraph(g, all);
  HiddenGraph hg{uniform_matrix(rng, s, s, -0.3, 1.0), uniform_matrix(rng, s, f, -1.0, 1.0)};
  // Keep symmetric sums away from the rectifier kink.
  for (int a = 0; a < s; ++a)
    for (int b = a + 1; b < s; ++b)
      if (std::abs(hg.weights(a, b) + hg.weights(b, a)) < 1e-3) hg.weights(a, b) += 0.01;
  const KernelGrad grad = rwk_hidden_grad(sub, hg, p);

  ModuleGradOutcome out;
  constexpr double h = 1e-5;
  auto check = [&](Matrix& m, const Matrix& analytic, const char* name) {
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      const double saved = m.data()[j];
      m.data()[j] = saved + h;
      const double up = rwk_hidden(sub, hg, p);
      m.data()[j] = saved - h;
      const double down = rwk_hidden(sub, hg, p);
      m.data()[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      if (rel > out.max_rel) {
        out.max_rel = rel;
        std::ostringstream msg;
        msg << name << "[" << j << "] analytic " << a << " numeric " << numeric << " (n=" << n << " s=" << s << " p=" << p
            << ")";
        out.worst = msg.str();
      }
    }
  };
  check(hg.weights, grad.d_weights, "W");
  check(hg.features, grad.d_features, "Z");
  return out;
}

// A few small random graphs with one-hot node labels, prepared with sampled
// anonymous-walk subgraphs.
PreparedDataset tiny_dataset(Rng& rng, int graphs, int f, std::uint64_t seed) {
  Dataset ds;
  ds.name = "grad-check";
  ds.class_count = 2;
  for (int i = 0; i < graphs; ++i) {
    const NodeId n = std::uniform_int_distribution<NodeId>(2, 7)(rng);
    Graph g = random_graph(rng, n, 0.5);
    g = g.with_features(one_hot_features(rng, n, f)).with_graph_label(i % 2);
    ds.graphs.push_back(std::move(g));
  }
  WalkConfig w;
  w.walk_length = 3;
  w.walks_per_node = 6;
  w.pattern_budget = 4;
  w.subgraph_cap = 8;
  w.seed = seed;
  return prepare_dataset(ds, w);
}

}  // namespace

CheckResult check_gradients(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  CheckResult r = named(3, "gradient correctness");
  FailureLog log;
  const auto count = static_cast<std::size_t>(opts.grad_instances);

  std::vector<double> module_err(count, 0.0);
  parallel_for(count, opts.threads, [&](std::size_t i) {
    const auto o = module_grad_instance(opts.seed, i);
    module_err[i] = o.max_rel;
    if (!(o.max_rel < 1e-4)) log.add(i, "module instance " + std::to_string(i) + ": " + o.worst);
  });

  std::vector<double> e2e_err(count, 0.0);
  std::vector<std::size_t> checked(count, 0);
  parallel_for(count, opts.threads, [&](std::size_t i) {
    Rng rng = make_rng(opts.seed, {0xc3e2, i});
    const int f = 3;
    const PreparedDataset data = tiny_dataset(rng, std::uniform_int_distribution<int>(2, 3)(rng), f, opts.seed + i);
    ModelConfig cfg;
    cfg.feature_dim = f;
    cfg.class_count = 2;
    cfg.experts = std::uniform_int_distribution<int>(2, 3)(rng);
    cfg.hidden_graphs = std::uniform_int_distribution<int>(1, 2)(rng);
    cfg.hidden_dim = std::uniform_int_distribution<int>(0, 1)(rng) ? 8 : 4;
    cfg.k_ept = std::uniform_int_distribution<int>(1, cfg.experts)(rng);
    cfg.kernel.max_step = std::uniform_int_distribution<int>(1, 3)(rng);
    cfg.kernel.step_mode = static_cast<StepMode>(std::uniform_int_distribution<int>(0, 2)(rng));
    cfg.combine = (i % 3 == 2) ? CombineMode::concat : CombineMode::weighted_sum;
    cfg.pooling = (i % 2) ? Pooling::sum : Pooling::mean;
    cfg.dropout = (i % 4 == 1) ? 0.3 : 0.0;
    MoseModel model(cfg, derive_seed(opts.seed, {0xc3e3, i}));
    // Zero-initialized biases put ReLU units fed by all-zero kernel features
    // (singleton subgraphs, p >= 1) exactly on the kink; move them off it.
    {
      std::uniform_real_distribution<double> jitter(-0.1, 0.1);
      auto& store = model.params();
      for (const auto& slot : store.slots())
        if (slot.name.ends_with(".b1") || slot.name.ends_with(".b2"))
          for (std::size_t j = slot.offset; j < slot.offset + slot.size(); ++j) store.values()[j] = jitter(rng);
    }
    GradCheckOptions go;
    go.seed = derive_seed(opts.seed, {0xc3e4, i});
    go.beta = (i % 5 == 4) ? 0.0 : 0.1;
    go.train_mode = (i % 7) != 6;
    std::vector<int> batch(data.graphs.size());
    std::iota(batch.begin(), batch.end(), 0);
    try {
      const auto res = grad_check(model, data, batch, go);
      e2e_err[i] = res.max_rel_error;
      checked[i] = res.checked;
      if (!(res.max_rel_error < 1e-4)) {
        std::ostringstream msg;
        msg << "end-to-end instance " << i << ": " << res.worst_tensor << "[" << res.worst_index << "] analytic "
            << res.analytic << " numeric " << res.numeric << " rel " << res.max_rel_error;
        log.add(count + i, msg.str());
      }
    } catch (const NumericError& e) {
      e2e_err[i] = INFINITY;
      log.add(count + i, "end-to-end instance " + std::to_string(i) + ": " + e.what());
    }
  });
  const double worst_module = *std::max_element(module_err.begin(), module_err.end());
  const double worst_e2e = *std::max_element(e2e_err.begin(), e2e_err.end());
  const std::size_t params = std::accumulate(checked.begin(), checked.end(), std::size_t{0});
  std::ostringstream d;
  d << count << " module instances (max rel " << worst_module << "), " << count << " end-to-end instances over " << params
    << " parameters (max rel " << worst_e2e << "), tolerance 1e-4";
  return finish(std::move(r), log, log.size() == 0, d.str(), t0);
}

CheckResult check_anonymous_walks(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  CheckResult r = named(4, "anonymous walk properties");
  FailureLog log;
  Rng rng = make_rng(opts.seed, {0xc4});
  std::uniform_int_distribution<NodeId> size(1, 10);
  std::uniform_real_distribution<double> density(0.1, 0.8);

  auto random_walk_on = [&](const Graph& g, int l) {
    WalkConfig w;
    w.walk_length = l;
    w.walks_per_node = 1;
    std::vector<NodeId> active;
    for (NodeId v = 0; v < g.node_count(); ++v)
      if (g.degree(v) > 0) active.push_back(v);
    const NodeId v = active[std::uniform_int_distribution<std::size_t>(0, active.size() - 1)(rng)];
    return sample_walks(g, v, w, rng).front();
  };
  // Walks need an edge to start from.
  auto walkable_graph = [&] {
    while (true) {
      Graph g = random_graph(rng, std::max<NodeId>(2, size(rng)), density(rng));
      if (g.edge_count() > 0) return g;
    }
  };

  // Fuzzed walks: invariants plus the defining property that two positions
  // share an index exactly when they visit the same node.
  for (int i = 0; i < opts.fuzz_walks; ++i) {
    const Graph g = walkable_graph();
    const int l = std::uniform_int_distribution<int>(1, 12)(rng);
    const RandomWalk walk = random_walk_on(g, l);
    const AnonymousWalk a = to_anonymous(walk);
    bool ok = a.size() == walk.size() && !a.empty() && a[0] == 0 && is_valid_pattern(a);
    int top = -1;
    for (std::size_t k = 0; ok && k < a.size(); ++k) {
      ok = a[k] <= top + 1;
      top = std::max(top, a[k]);
      for (std::size_t j = 0; ok && j < k; ++j) ok = (a[j] == a[k]) == (walk[j] == walk[k]);
    }
    if (!ok) log.add(static_cast<std::size_t>(i), "fuzz walk " + std::to_string(i) + " violates the invariants");
  }

  // Relabeling invariance of single walks and of exhaustive multisets.
  for (int i = 0; i < opts.relabel_pairs; ++i) {
    const Graph g = walkable_graph();
    const auto perm = random_permutation(rng, g.node_count());
    const Graph h = g.relabeled(perm);
    const int l = std::uniform_int_distribution<int>(1, 6)(rng);
    const RandomWalk walk = random_walk_on(g, l);
    RandomWalk mapped;
    for (NodeId v : walk) mapped.push_back(perm[v]);
    bool ok = to_anonymous(walk) == to_anonymous(mapped);
    const NodeId v = walk.front();
    const int le = std::min(l, 4);
    ok = ok && enumerate_anonymous_walks(g, v, le) == enumerate_anonymous_walks(h, perm[v], le);
    if (!ok) log.add(100000 + static_cast<std::size_t>(i), "relabel pair " + std::to_string(i) + " differs");
  }

  // Multiset size equals the row sum of A^l.
  int checked_nodes = 0;
  for (int i = 0; i < opts.enumeration_graphs; ++i) {
    const Graph g = random_graph(rng, size(rng), density(rng));
    const int l = std::uniform_int_distribution<int>(1, 5)(rng);
    const Matrix al = power(g.adjacency_matrix(), l);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      std::uint64_t total = 0;
      for (const auto& [p, c] : enumerate_anonymous_walks(g, v, l)) total += c;
      const double expect = al.row(v).sum();
      ++checked_nodes;
      if (static_cast<double>(total) != expect)
        log.add(200000 + static_cast<std::size_t>(i) * 16 + static_cast<std::size_t>(v),
                "graph " + std::to_string(i) + " node " + std::to_string(v) + ": enumerated " + std::to_string(total) +
                    " walks, A^" + std::to_string(l) + " row sum " + std::to_string(expect));
    }
  }
  std::ostringstream d;
  d << opts.fuzz_walks << " fuzzed walks, " << opts.relabel_pairs << " relabeled pairs, " << opts.enumeration_graphs
    << " graphs (" << checked_nodes << " roots) for enumeration counts, " << log.size() << " violations";
  return finish(std::move(r), log, log.size() == 0, d.str(), t0);
}

CheckResult check_walk_distinguishing(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  CheckResult r = named(5, "walk distribution distinguishing");
  FailureLog log;
  constexpr std::uint64_t budget = 10'000'000;
  Rng rng = make_rng(opts.seed, {0xc5});
  std::uniform_int_distribution<NodeId> size(3, 12);
  std::uniform_real_distribution<double> density(0.2, 0.6);

  // Rooted graph with at least one edge at the root and a bounded number of
  // length-l walks for l = 2 |E'| of its own ego graph.
  auto ego_edges = [](const Graph& g, NodeId v) {
    return induced_subgraph(g, ball(g, v, 1)).graph.edge_count();
  };
  auto draw = [&](Graph& g, NodeId& v) {
    while (true) {
      g = random_sparse_graph(rng, size(rng), 3, density(rng));
      v = std::uniform_int_distribution<NodeId>(0, g.node_count() - 1)(rng);
      if (g.degree(v) == 0) continue;
      if (count_walks_from(g, v, static_cast<int>(2 * ego_edges(g, v))) <= budget) return;
    }
  };
  auto ego_code = [](const Graph& g, NodeId v) {
    const auto sub = induced_subgraph(g.with_features(Matrix(g.node_count(), 0)), ball(g, v, 1));
    return canonical_form(sub.graph, {}, sub.center);
  };

  int distinct_pairs = 0, distinguished = 0, iso_pairs = 0, iso_flagged = 0;
  for (int i = 0; i < opts.rooted_pairs; ++i) {
    Graph g, h;
    NodeId v = 0, w = 0;
    while (true) {
      draw(g, v);
      draw(h, w);
      const int l = static_cast<int>(2 * std::max(ego_edges(g, v), ego_edges(h, w)));
      if (count_walks_from(g, v, l) <= budget && count_walks_from(h, w, l) <= budget) break;
    }
    const int l = static_cast<int>(2 * std::max(ego_edges(g, v), ego_edges(h, w)));
    if (ego_code(g, v) != ego_code(h, w)) {
      ++distinct_pairs;
      if (walk_distributions_distinguish(g, v, h, w, l, budget))
        ++distinguished;
      else
        log.add(static_cast<std::size_t>(i), "pair " + std::to_string(i) + " not distinguished at l=" +
                                                 std::to_string(l) + ": G " + describe(g) + " root " +
                                                 std::to_string(v) + " | H " + describe(h) + " root " +
                                                 std::to_string(w));
    }
    // Isomorphic rooted copy of g.
    const auto perm = random_permutation(rng, g.node_count());
    const Graph gp = g.relabeled(perm);
    const int lg = static_cast<int>(2 * ego_edges(g, v));
    ++iso_pairs;
    if (walk_distributions_distinguish(g, v, gp, perm[v], lg, budget)) {
      ++iso_flagged;
      log.add(1000000 + static_cast<std::size_t>(i), "isomorphic pair " + std::to_string(i) + " reported distinct");
    }
  }
  const double rate = distinct_pairs ? static_cast<double>(distinguished) / distinct_pairs : 1.0;
  std::ostringstream d;
  d << distinguished << "/" << distinct_pairs << " non-isomorphic-ego pairs distinguished (" << rate * 100.0
    << "%, need >= 95%) out of " << opts.rooted_pairs << " random rooted pairs; " << iso_flagged << "/" << iso_pairs
    << " isomorphic pairs flagged (need 0)";
  const bool ok = distinct_pairs > 0 && rate >= 0.95 && iso_flagged == 0;
  return finish(std::move(r), log, ok, d.str(), t0);
}

CheckResult check_expressivity(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  CheckResult r = named(6, "expressivity");
  FailureLog log;
  std::vector<Graph> graphs;
  for (NodeId n = 1; n <= opts.wl_max_nodes; ++n)
    for (auto& g : all_graphs(n)) graphs.push_back(std::move(g));
  const SwlPolicy ego1 = SwlPolicy::ego(1);

  // Joint refinement per node count so color ids are shared within a group.
  std::vector<Coloring> wl(graphs.size()), swl(graphs.size());
  for (NodeId n = 1; n <= opts.wl_max_nodes; ++n) {
    std::vector<std::size_t> idx;
    std::vector<Graph> group;
    for (std::size_t i = 0; i < graphs.size(); ++i)
      if (graphs[i].node_count() == n) {
        idx.push_back(i);
        group.push_back(graphs[i]);
      }
    const auto a = wl1_refine(group);
    const auto b = swl_refine(group, ego1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      wl[idx[k]] = a[k];
      swl[idx[k]] = b[k];
    }
  }
  auto pairs = equal_size_pairs(graphs);
  int wl_count = 0, swl_count = 0, superset_violations = 0, strict = 0;
  for (auto& p : pairs) {
    p.wl1 = wl[p.first].histogram != wl[p.second].histogram;
    p.swl = swl[p.first].histogram != swl[p.second].histogram;
    wl_count += p.wl1;
    swl_count += p.swl;
    strict += p.swl && !p.wl1;
    if (p.wl1 && !p.swl) {
      ++superset_violations;
      log.add(static_cast<std::size_t>(p.id), "pair " + std::to_string(p.id) + " separated by 1-WL but not SWL");
    }
  }

  const Graph c6 = shapes::cycle(6);
  const Graph c33 = shapes::disjoint_union(shapes::cycle(3), shapes::cycle(3));
  const bool classic = distinguish(c6, c33, Refiner::swl, ego1) && !distinguish(c6, c33, Refiner::wl1);
  if (!classic) log.add(0, "C6 vs C3+C3: expected SWL-ego-1 to separate and 1-WL not to");

  int lemma_failures = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    if (!lemma1_check(graphs[i], ego1)) {
      ++lemma_failures;
      log.add(2000000 + i, "lemma check failed on graph " + std::to_string(i) + " " + describe(graphs[i]));
    }

  // MoSE embeddings under random initializations.
  const int f = opts.wl_max_nodes;  // degree one-hot, degrees 0..n-1
  std::vector<std::vector<PreparedNode>> prepared(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) prepared[i] = prepare_policy_nodes(graphs[i], ego1, f);
  ModelConfig cfg;
  cfg.feature_dim = f;
  cfg.class_count = 2;
  cfg.kernel.max_step = 3;
  std::vector<std::vector<std::uint8_t>> separated(static_cast<std::size_t>(opts.inits),
                                                   std::vector<std::uint8_t>(pairs.size(), 0));
  parallel_for(static_cast<std::size_t>(opts.inits), opts.threads, [&](std::size_t t) {
    const MoseModel model(cfg, derive_seed(opts.seed, {0xc6, t}));
    std::vector<Vector> emb(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) emb[i] = graph_embedding(model, prepared[i]);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& p = pairs[k];
      separated[t][k] = (emb[p.first] - emb[p.second]).cwiseAbs().maxCoeff() > 1e-8;
    }
  });
  int mose_short = 0;
  const int need = static_cast<int>(std::ceil(0.99 * opts.inits));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto& p = pairs[k];
    p.mose_trials = opts.inits;
    for (int t = 0; t < opts.inits; ++t) p.mose_separations += separated[static_cast<std::size_t>(t)][k];
    if (p.swl && p.mose_separations < need) {
      ++mose_short;
      log.add(1000000 + k, "SWL-separated pair " + std::to_string(p.id) + " separated by MoSE in " +
                               std::to_string(p.mose_separations) + "/" + std::to_string(opts.inits) +
                               " inits: " + describe(graphs[p.first]) + " | " + describe(graphs[p.second]));
    }
  }
  if (!opts.report_dir.empty()) {
    std::filesystem::create_directories(opts.report_dir);
    std::ofstream out(opts.report_dir / "pair_corpus.csv");
    write_pair_report(out, graphs, pairs);
  }

  std::ostringstream d;
  d << graphs.size() << " graphs, " << pairs.size() << " equal-size pairs: 1-WL separates " << wl_count
    << ", SWL-ego-1 separates " << swl_count << " (" << strict << " beyond 1-WL, " << superset_violations
    << " inclusion violations); C6 vs C3+C3 " << (classic ? "ok" : "wrong") << "; lemma check failures "
    << lemma_failures << "; MoSE (P=3) below " << need << "/" << opts.inits << " inits on " << mose_short
    << " SWL-separated pairs";
  const bool ok = superset_violations == 0 && strict > 0 && classic && lemma_failures == 0 && mose_short == 0;
  return finish(std::move(r), log, ok, d.str(), t0);
}

std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& opts) {
  if (suite == "kernel-oracle") return {check_kernel_oracle(opts), check_kernel_identity(opts)};
  if (suite == "grad") return {check_gradients(opts)};
  if (suite == "walks") return {check_anonymous_walks(opts), check_walk_distinguishing(opts)};
  if (suite == "wl") return {check_expressivity(opts)};
  throw InvalidArgument("unknown verify suite '" + suite + "' (expected kernel-oracle, grad, walks, wl)");
}

}  // namespace mose
