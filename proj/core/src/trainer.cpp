#include "mose/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mose/error.hpp"
#include "mose/parallel.hpp"
#include "mose/rng.hpp"

namespace mose {

namespace {

constexpr double kCvGuard = 1e-10;
// Items per gradient buffer; fixed so the reduction order never depends on
// the thread count.
constexpr std::size_t kChunk = 8;

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("train: epochs must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("train: invalid learning rate");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("train: beta must be finite and >= 0");
  if (batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
    throw InvalidArgument("train: invalid Adam hyperparameters");
  if (patience < 0) throw InvalidArgument("train: patience must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw InvalidArgument("train: val_fraction must be in [0, 1)");
  if (threads < 1) throw InvalidArgument("train: threads must be >= 1");
}

std::vector<double> expert_importance(std::span<const Route> routes, int experts) {
  std::vector<double> totals(static_cast<std::size_t>(experts), 0.0);
  for (const auto& r : routes)
    for (std::size_t m = 0; m < r.indices.size(); ++m) totals.at(static_cast<std::size_t>(r.indices[m])) += r.weights[m];
  return totals;
}

double cv_squared(std::span<const double> totals, std::vector<double>* grad) {
  const auto K = static_cast<double>(totals.size());
  if (totals.empty()) throw InvalidArgument("cv_squared: empty vector");
  const double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / K;
  double var = 0.0;
  for (double t : totals) var += (t - mean) * (t - mean);
  var /= K;
  const double denom = mean + kCvGuard;
  if (grad) {
    grad->assign(totals.size(), 0.0);
    for (std::size_t k = 0; k < totals.size(); ++k)
      (*grad)[k] = 2.0 * (totals[k] - mean) / (K * denom * denom) - 2.0 * var / (K * denom * denom * denom);
  }
  return var / (denom * denom);
}

double importance_loss(std::span<const Route> routes, int experts, std::vector<std::vector<double>>* d_weights) {
  if (routes.empty()) throw InvalidArgument("importance_loss: empty batch");
  const auto totals = expert_importance(routes, experts);
  std::vector<double> g;
  const double loss = cv_squared(totals, d_weights ? &g : nullptr);
  if (d_weights) {
    d_weights->resize(routes.size());
    for (std::size_t i = 0; i < routes.size(); ++i) {
      auto& dw = (*d_weights)[i];
      dw.resize(routes[i].indices.size());
      for (std::size_t m = 0; m < dw.size(); ++m) dw[m] = g[static_cast<std::size_t>(routes[i].indices[m])];
    }
  }
  return loss;
}

double total_loss(double task_loss, double importance, double beta) { return task_loss + beta * importance; }

double cross_entropy(const Vector& logits, int label, Vector* dlogits) {
  if (label < 0 || label >= logits.size()) throw InvalidArgument("cross_entropy: label out of range");
  const double top = logits.maxCoeff();
  const Vector e = (logits.array() - top).exp().matrix();
  const double z = e.sum();
  if (dlogits) {
    *dlogits = e / z;
    (*dlogits)[label] -= 1.0;
  }
  return std::log(z) + top - logits[label];
}

std::size_t PreparedDataset::item_count() const noexcept {
  return task == TaskKind::node_level ? (graphs.empty() ? 0 : graphs.front().nodes.size()) : graphs.size();
}

int PreparedDataset::label(std::size_t item) const {
  return task == TaskKind::node_level ? node_labels.at(item) : graphs.at(item).label;
}

std::vector<int> PreparedDataset::labels() const {
  std::vector<int> out(item_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = label(i);
  return out;
}

namespace {

PreparedDataset prepare_from(const Dataset& ds, const std::function<std::vector<NodeSubgraph>(std::size_t)>& subs,
                             Activation act, int threads) {
  validate(ds);
  PreparedDataset out;
  out.name = ds.name;
  out.task = ds.task;
  out.class_count = ds.class_count;
  out.feature_dim = ds.graphs.empty() ? 0 : ds.graphs.front().feature_dim();
  out.graphs.resize(ds.graphs.size());
  parallel_for(ds.graphs.size(), threads, [&](std::size_t g) {
    const auto sg = subs(g);
    auto& pg = out.graphs[g];
    pg.nodes.reserve(sg.size());
    for (const auto& s : sg) pg.nodes.push_back(prepare_node(s, act));
    pg.label = ds.graphs[g].graph_label().value_or(-1);
  });
  if (ds.task == TaskKind::node_level) out.node_labels = ds.graphs.front().node_labels();
  return out;
}

}  // namespace

SubgraphCache build_subgraph_cache(const Dataset& ds, const WalkConfig& walks, int threads) {
  walks.validate();
  SubgraphCache cache;
  cache.dataset = ds.name;
  cache.config = walks;
  cache.members.resize(ds.graphs.size());
  const bool inner = ds.graphs.size() == 1;
  parallel_for(ds.graphs.size(), inner ? 1 : threads, [&](std::size_t g) {
    const auto ex = extract_all(ds.graphs[g], walks, g, inner ? threads : 1);
    auto& rec = cache.members[g];
    rec.reserve(ex.subgraphs.size());
    for (const auto& s : ex.subgraphs) rec.push_back(s.parent_ids);
  });
  return cache;
}

PreparedDataset prepare_dataset(const Dataset& ds, const SubgraphCache& cache, Activation act, int threads) {
  if (cache.members.size() != ds.graphs.size())
    throw InvalidArgument("subgraph cache does not cover the dataset (" + std::to_string(cache.members.size()) +
                          " vs " + std::to_string(ds.graphs.size()) + " graphs)");
  return prepare_from(ds, [&](std::size_t g) { return cache.subgraphs(ds.graphs[g], g); }, act, threads);
}

PreparedDataset prepare_dataset(const Dataset& ds, const WalkConfig& walks, Activation act, int threads) {
  return prepare_dataset(ds, build_subgraph_cache(ds, walks, threads), act, threads);
}

TrainSplit fold_split(const SplitPlan& plan, int fold, const PreparedDataset& data, double val_fraction,
                      std::uint64_t seed) {
  if (plan.kind != SplitKind::k_fold) throw InvalidArgument("fold_split: plan is not a k-fold plan");
  if (fold < 0 || fold >= static_cast<int>(plan.folds.size())) throw InvalidArgument("fold_split: fold out of range");
  const Fold& f = plan.folds[static_cast<std::size_t>(fold)];
  TrainSplit out;
  out.test = f.test;
  std::map<int, std::vector<int>> by_class;
  for (int id : f.train) by_class[data.label(static_cast<std::size_t>(id))].push_back(id);
  for (auto& [label, ids] : by_class) {
    Rng rng = make_rng(seed, {0x7a1ULL, static_cast<std::uint64_t>(label)});
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto held = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(ids.size()) + 0.5));
    out.val.insert(out.val.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(held));
    out.train.insert(out.train.end(), ids.begin() + static_cast<std::ptrdiff_t>(held), ids.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

TrainSplit mask_split(const SplitPlan& plan) {
  if (plan.kind != SplitKind::masks) throw InvalidArgument("mask_split: plan has no node masks");
  TrainSplit out;
  for (std::size_t i = 0; i < plan.masks.train.size(); ++i) {
    if (plan.masks.train[i]) out.train.push_back(static_cast<int>(i));
    if (plan.masks.val[i]) out.val.push_back(static_cast<int>(i));
    if (plan.masks.test[i]) out.test.push_back(static_cast<int>(i));
  }
  return out;
}

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw InvalidArgument("accuracy: empty or mismatched input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw InvalidArgument("macro_f1: empty or mismatched input");
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  double total = 0.0;
  for (int c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == c, p = predicted[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    total += tp ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : 0.0;
  }
  return total / static_cast<double>(classes.size());
}

namespace {

struct ItemWork {
  std::vector<NodeTape> tapes;
  std::vector<Route> routes;
  std::vector<Vector> hs;
  HeadTape head;
  bool in_loss = false;
  double ce = 0.0;
  int pred = -1;
  Vector dlogits;
  std::vector<std::uint8_t> sig;
};

int argmax(const Vector& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

}  // namespace

BatchResult batch_loss(const MoseModel& model, const PreparedDataset& data, std::span<const int> loss_ids,
                       const ForwardContext& ctx, double beta, bool want_grad, int threads,
                       std::span<const int> route_ids) {
  const bool node_task = data.task == TaskKind::node_level;
  const std::span<const int> items = route_ids.empty() ? loss_ids : route_ids;
  if (items.empty()) throw InvalidArgument("batch_loss: empty batch");
  std::vector<std::uint8_t> in_loss(data.item_count(), 0);
  for (int id : loss_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= data.item_count()) throw InvalidArgument("batch_loss: item out of range");
    in_loss[static_cast<std::size_t>(id)] = 1;
  }
  for (int id : items)
    if (id < 0 || static_cast<std::size_t>(id) >= data.item_count()) throw InvalidArgument("batch_loss: item out of range");
  const double inv_loss = loss_ids.empty() ? 0.0 : 1.0 / static_cast<double>(loss_ids.size());

  std::vector<ItemWork> work(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) {
    ItemWork& w = work[i];
    const auto item = static_cast<std::size_t>(items[i]);
    ForwardContext c = ctx;
    c.item = item;
    const std::size_t count = node_task ? 1 : data.graphs[item].nodes.size();
    w.tapes.resize(count);
    w.hs.resize(count);
    for (std::size_t v = 0; v < count; ++v) {
      const PreparedNode& node = node_task ? data.graphs.front().nodes[item] : data.graphs[item].nodes[v];
      w.hs[v] = model.embed_node(node, c, node_task ? 0 : v, &w.tapes[v]);
      model.append_signature(w.tapes[v], w.sig);
      w.routes.push_back(w.tapes[v].route);
    }
    if (!want_grad) w.tapes.clear();
    w.in_loss = in_loss[item] != 0;
    if (!w.in_loss) return;
    const Vector pooled = node_task ? w.hs.front() : readout(w.hs, model.config().pooling);
    const Vector logits = model.head_forward(pooled, c, 0, &w.head);
    MoseModel::append_signature(w.head, w.sig);
    w.ce = cross_entropy(logits, data.label(item), &w.dlogits);
    w.dlogits *= inv_loss;
    w.pred = argmax(logits);
  });

  BatchResult out;
  for (auto& w : work) {
    out.routes.insert(out.routes.end(), w.routes.begin(), w.routes.end());
    if (w.in_loss) {
      out.loss_task += w.ce;
      out.predictions.push_back(w.pred);
    }
    out.signature.insert(out.signature.end(), w.sig.begin(), w.sig.end());
  }
  out.loss_task *= inv_loss;

  std::vector<std::vector<double>> d_weights;
  out.loss_importance = out.routes.empty() ? 0.0
                                           : importance_loss(out.routes, model.config().experts,
                                                             want_grad && beta > 0.0 ? &d_weights : nullptr);
  out.loss = total_loss(out.loss_task, out.loss_importance, beta);
  if (!want_grad) return out;

  for (auto& dw : d_weights)
    for (double& x : dw) x *= beta;
  std::vector<std::size_t> route_offset(work.size() + 1, 0);
  for (std::size_t i = 0; i < work.size(); ++i) route_offset[i + 1] = route_offset[i] + work[i].routes.size();

  const std::size_t chunks = (work.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> buffers(chunks);
  parallel_for(chunks, threads, [&](std::size_t ch) {
    auto& buf = buffers[ch];
    buf = model.params().zeros();
    for (std::size_t i = ch * kChunk; i < std::min(work.size(), (ch + 1) * kChunk); ++i) {
      const ItemWork& w = work[i];
      const auto item = static_cast<std::size_t>(items[i]);
      std::vector<Vector> dhs;
      if (w.in_loss) {
        const Vector dpooled = model.head_backward(w.head, w.dlogits, buf);
        dhs = node_task ? std::vector<Vector>{dpooled} : readout_backward(w.hs, model.config().pooling, dpooled);
      } else {
        dhs.assign(w.hs.size(), Vector::Zero(model.config().hidden_dim));
      }
      for (std::size_t v = 0; v < w.tapes.size(); ++v) {
        const PreparedNode& node = node_task ? data.graphs.front().nodes[item] : data.graphs[item].nodes[v];
        const std::span<const double> dz =
            d_weights.empty() ? std::span<const double>() : std::span<const double>(d_weights[route_offset[i] + v]);
        model.embed_node_backward(node, w.tapes[v], dhs[v], dz, ctx.train, buf);
      }
    }
  });
  out.grads = model.params().zeros();
  for (const auto& buf : buffers)
    for (std::size_t j = 0; j < buf.size(); ++j) out.grads[j] += buf[j];
  return out;
}

Metrics evaluate(const MoseModel& model, const PreparedDataset& data, std::span<const int> ids, int threads) {
  if (ids.empty()) throw InvalidArgument("evaluate: empty split part");
  const ForwardContext ctx{};
  Metrics m;
  std::vector<Route> routes;
  std::vector<int> truth, pred;
  double loss = 0.0;
  constexpr std::size_t block = 256;
  for (std::size_t start = 0; start < ids.size(); start += block) {
    const auto part = ids.subspan(start, std::min(block, ids.size() - start));
    BatchResult r = batch_loss(model, data, part, ctx, 0.0, false, threads);
    loss += r.loss_task * static_cast<double>(part.size());
    routes.insert(routes.end(), r.routes.begin(), r.routes.end());
    pred.insert(pred.end(), r.predictions.begin(), r.predictions.end());
    for (int id : part) truth.push_back(data.label(static_cast<std::size_t>(id)));
  }
  m.loss_task = loss / static_cast<double>(ids.size());
  m.accuracy = accuracy(truth, pred);
  m.macro_f1 = macro_f1(truth, pred);
  m.expert_load = expert_importance(routes, model.config().experts);
  m.loss_importance = importance_loss(routes, model.config().experts);
  return m;
}

namespace {

std::string parameter_norms(const MoseModel& model) {
  std::ostringstream out;
  const auto& p = model.params();
  for (std::size_t i = 0; i < p.slots().size(); ++i) {
    const auto view = p(static_cast<int>(i));
    out << (i ? ", " : "") << p.slots()[i].name << '=' << view.norm();
  }
  return out.str();
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

EpochRecord make_record(int epoch, std::string split, const Metrics& m) {
  return {epoch, std::move(split), m.loss_task, m.loss_importance, m.accuracy, m.macro_f1, m.expert_load};
}

}  // namespace

TrainResult train(MoseModel& model, const PreparedDataset& data, const TrainSplit& split, const TrainConfig& cfg,
                  const EpochCallback& on_record) {
  cfg.validate();
  if (split.train.empty()) throw InvalidArgument("train: empty training part");
  if (data.feature_dim != model.config().feature_dim || data.class_count != model.config().class_count)
    throw InvalidArgument("train: model dimensions do not match the dataset");
  const bool node_task = data.task == TaskKind::node_level;
  std::vector<int> all_nodes;
  if (node_task) {
    all_nodes.resize(data.item_count());
    std::iota(all_nodes.begin(), all_nodes.end(), 0);
  }

  Adam adam(model.params().size(), {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  TrainResult result;
  auto emit = [&](EpochRecord rec) {
    if (on_record) on_record(rec);
    result.curves.push_back(std::move(rec));
  };

  std::vector<double> best = {model.params().values().begin(), model.params().values().end()};
  double best_acc = -1.0, best_loss = 0.0;
  const int K = model.config().experts;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> order = split.train;
    Rng shuffle = make_rng(cfg.seed, {0xe90cULL, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), shuffle);
    const std::size_t batch = node_task ? order.size() : static_cast<std::size_t>(cfg.batch_size);

    double task_sum = 0.0, imp_sum = 0.0;
    std::size_t batches = 0;
    std::vector<int> truth, pred;
    std::vector<double> load(static_cast<std::size_t>(K), 0.0);
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      std::vector<int> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch)));
      if (node_task) std::sort(ids.begin(), ids.end());
      const ForwardContext ctx{true, cfg.seed, static_cast<std::uint64_t>(epoch), 0};
      BatchResult r = batch_loss(model, data, ids, ctx, cfg.beta, true, cfg.threads,
                                 node_task ? std::span<const int>(all_nodes) : std::span<const int>());
      if (!std::isfinite(r.loss) || !all_finite(r.grads)) {
        std::ostringstream msg;
        msg << "non-finite loss or gradient at epoch " << epoch << ", batch " << b << " (task " << r.loss_task
            << ", importance " << r.loss_importance << "); parameter norms: " << parameter_norms(model);
        throw NumericError(msg.str());
      }
      adam.step(model.params().values(), r.grads);
      task_sum += r.loss_task * static_cast<double>(ids.size());
      imp_sum += r.loss_importance;
      ++batches;
      for (int id : ids) truth.push_back(data.label(static_cast<std::size_t>(id)));
      pred.insert(pred.end(), r.predictions.begin(), r.predictions.end());
      const auto totals = expert_importance(r.routes, K);
      for (int k = 0; k < K; ++k) load[static_cast<std::size_t>(k)] += totals[static_cast<std::size_t>(k)];
    }
    EpochRecord rec{epoch, "train", task_sum / static_cast<double>(order.size()), imp_sum / static_cast<double>(batches),
                    accuracy(truth, pred), macro_f1(truth, pred), load};
    emit(rec);
    result.epochs_run = epoch;

    if (!split.val.empty()) {
      const Metrics vm = evaluate(model, data, split.val, cfg.threads);
      emit(make_record(epoch, "val", vm));
      if (vm.accuracy > best_acc || (vm.accuracy == best_acc && vm.loss_task < best_loss)) {
        best_acc = vm.accuracy;
        best_loss = vm.loss_task;
        result.best_epoch = epoch;
        best.assign(model.params().values().begin(), model.params().values().end());
      } else if (cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (!split.val.empty() && result.best_epoch > 0) std::copy(best.begin(), best.end(), model.params().values().begin());

  result.train = evaluate(model, data, split.train, cfg.threads);
  if (!split.val.empty()) result.val = evaluate(model, data, split.val, cfg.threads);
  if (!split.test.empty()) {
    result.test = evaluate(model, data, split.test, cfg.threads);
    emit(make_record(result.best_epoch, "test", result.test));
  }
  result.train.curves = result.curves;
  return result;
}

void summarize(CvSummary& s) {
  if (s.fold_accuracy.empty()) return;
  const auto n = static_cast<double>(s.fold_accuracy.size());
  s.mean = std::accumulate(s.fold_accuracy.begin(), s.fold_accuracy.end(), 0.0) / n;
  double var = 0.0;
  for (double a : s.fold_accuracy) var += (a - s.mean) * (a - s.mean);
  s.std = std::sqrt(var / n);
}

CvSummary cross_validate(const PreparedDataset& data, const SplitPlan& plan, const ModelConfig& model_cfg,
                         const TrainConfig& cfg, const std::function<void(int, const EpochRecord&)>& on_record) {
  if (data.task != TaskKind::graph_level) throw InvalidArgument("cross_validate: graph-level dataset required");
  CvSummary out;
  for (int f = 0; f < static_cast<int>(plan.folds.size()); ++f) {
    const std::uint64_t fold_seed = derive_seed(cfg.seed, {0xf01dULL, static_cast<std::uint64_t>(f)});
    MoseModel model(model_cfg, fold_seed);
    TrainConfig fc = cfg;
    fc.seed = fold_seed;
    const TrainSplit split = fold_split(plan, f, data, cfg.val_fraction, fold_seed);
    EpochCallback cb;
    if (on_record) cb = [&](const EpochRecord& r) { on_record(f, r); };
    out.folds.push_back(train(model, data, split, fc, cb));
    out.fold_accuracy.push_back(out.folds.back().test.accuracy);
  }
  summarize(out);
  return out;
}

GradCheckResult grad_check(MoseModel& model, const PreparedDataset& data, std::span<const int> batch,
                           const GradCheckOptions& opts) {
  const bool node_task = data.task == TaskKind::node_level;
  std::vector<int> all_nodes;
  if (node_task) {
    all_nodes.resize(data.item_count());
    std::iota(all_nodes.begin(), all_nodes.end(), 0);
  }
  const std::span<const int> route_ids = node_task ? std::span<const int>(all_nodes) : std::span<const int>();
  const ForwardContext ctx{opts.train_mode, opts.seed, 0, 0};

  auto signature = [&](const BatchResult& r) {
    auto sig = r.signature;
    model.append_parameter_signature(sig);
    return sig;
  };
  const BatchResult base = batch_loss(model, data, batch, ctx, opts.beta, true, 1, route_ids);
  const auto sig0 = signature(base);

  GradCheckResult out;
  out.grads = base.grads;
  auto values = model.params().values();
  for (const auto& slot : model.params().slots()) {
    for (std::size_t j = slot.offset; j < slot.offset + slot.size(); ++j) {
      const double saved = values[j];
      double h = opts.step;
      bool ok = false;
      double numeric = 0.0;
      for (int attempt = 0; attempt <= opts.retries && !ok; ++attempt, h /= 10.0) {
        values[j] = saved + h;
        const BatchResult plus = batch_loss(model, data, batch, ctx, opts.beta, false, 1, route_ids);
        const bool same_plus = signature(plus) == sig0;
        values[j] = saved - h;
        const BatchResult minus = batch_loss(model, data, batch, ctx, opts.beta, false, 1, route_ids);
        const bool same_minus = signature(minus) == sig0;
        values[j] = saved;
        if (same_plus && same_minus) {
          numeric = (plus.loss - minus.loss) / (2.0 * h);
          ok = true;
        }
      }
      if (!ok)
        throw NumericError("grad_check: discrete decision flips under perturbation of " + slot.name + "[" +
                           std::to_string(j - slot.offset) + "] even at step " + std::to_string(h * 10.0));
      const double a = base.grads[j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      ++out.checked;
      if (rel > out.max_rel_error || out.worst_tensor.empty()) {
        out.max_rel_error = rel;
        out.worst_tensor = slot.name;
        out.worst_index = j - slot.offset;
        out.analytic = a;
        out.numeric = numeric;
      }
    }
  }
  return out;
}

}  // namespace mose
