#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mose/data_io.hpp"
#include "mose/moe.hpp"
#include "mose/walks.hpp"

namespace mose {

struct TrainConfig {
  int epochs = 400;
  double learning_rate = 1e-3;
  double beta = 0.1;
  int batch_size = 2;  ///< graph tasks; node tasks are full-batch
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int patience = 0;            ///< epochs without validation improvement; 0 disables
  double val_fraction = 0.0;   ///< share of each training fold held out to pick the best epoch
  int threads = 1;

  void validate() const;
};

/// Per-expert sum of routing weights over the routes.
std::vector<double> expert_importance(std::span<const Route> routes, int experts);

/// Squared coefficient of variation (population std, guard 1e-10). When
/// `grad` is given it receives d(CV^2)/d(totals).
double cv_squared(std::span<const double> totals, std::vector<double>* grad = nullptr);

/// CV^2 of expert_importance(routes). `d_weights`, when given, receives the
/// gradient with respect to each route's weights (same shape as the routes).
double importance_loss(std::span<const Route> routes, int experts,
                       std::vector<std::vector<double>>* d_weights = nullptr);

double total_loss(double task_loss, double importance, double beta);

/// -log softmax(logits)[label]; `dlogits` receives softmax - onehot.
double cross_entropy(const Vector& logits, int label, Vector* dlogits = nullptr);

struct PreparedGraph {
  std::vector<PreparedNode> nodes;
  int label = -1;
};

/// Parameter-independent per-node inputs for a whole dataset. For node tasks
/// there is a single graph and items are its nodes; otherwise items are graphs.
struct PreparedDataset {
  std::string name;
  TaskKind task = TaskKind::graph_level;
  int class_count = 0;
  int feature_dim = 0;
  std::vector<PreparedGraph> graphs;
  std::vector<int> node_labels;

  std::size_t item_count() const noexcept;
  int label(std::size_t item) const;
  std::vector<int> labels() const;
};

PreparedDataset prepare_dataset(const Dataset& ds, const SubgraphCache& cache, Activation act = Activation::relu,
                                int threads = 1);
/// Runs walk extraction first (stream id = graph index).
PreparedDataset prepare_dataset(const Dataset& ds, const WalkConfig& walks, Activation act = Activation::relu,
                                int threads = 1);
SubgraphCache build_subgraph_cache(const Dataset& ds, const WalkConfig& walks, int threads = 1);

/// Item ids (graph ids or node ids) per part.
struct TrainSplit {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Fold `fold` of a k-fold plan; `val_fraction` of the training part is held
/// out per class for early stopping.
TrainSplit fold_split(const SplitPlan& plan, int fold, const PreparedDataset& data, double val_fraction,
                      std::uint64_t seed);
TrainSplit mask_split(const SplitPlan& plan);

struct EpochRecord {
  int epoch = 0;
  std::string split;
  double loss_task = 0.0;
  double loss_importance = 0.0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> expert_load;
};

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double loss_task = 0.0;
  double loss_importance = 0.0;
  std::vector<double> expert_load;
  std::vector<EpochRecord> curves;
};

double accuracy(std::span<const int> truth, std::span<const int> predicted);
/// Mean F1 over classes that occur in truth or predictions.
double macro_f1(std::span<const int> truth, std::span<const int> predicted);

/// Loss, gradient and bookkeeping for one batch.
struct BatchResult {
  double loss_task = 0.0;
  double loss_importance = 0.0;
  double loss = 0.0;
  std::vector<double> grads;  ///< empty unless requested
  std::vector<int> predictions;  ///< per loss item
  std::vector<Route> routes;     ///< per routed node, item order
  std::vector<std::uint8_t> signature;
};

/// Cross-entropy averaged over `loss_ids` plus beta times the importance loss
/// over every node routed in the batch. For node tasks `route_ids` (a superset
/// of `loss_ids`) selects the nodes whose routes enter the importance loss;
/// empty means `loss_ids`.
BatchResult batch_loss(const MoseModel& model, const PreparedDataset& data, std::span<const int> loss_ids,
                       const ForwardContext& ctx, double beta, bool want_grad, int threads,
                       std::span<const int> route_ids = {});

/// Eval-mode metrics on the given items. Throws InvalidArgument when empty.
Metrics evaluate(const MoseModel& model, const PreparedDataset& data, std::span<const int> ids, int threads = 1);

struct TrainResult {
  Metrics train;
  Metrics val;
  Metrics test;
  std::vector<EpochRecord> curves;
  int best_epoch = 0;
  int epochs_run = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(MoseModel& model, const PreparedDataset& data, const TrainSplit& split, const TrainConfig& cfg,
                  const EpochCallback& on_record = {});

struct CvSummary {
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation
  std::vector<TrainResult> folds;
};

void summarize(CvSummary& summary);

/// One freshly initialized model per fold (init seed derived from cfg.seed and
/// the fold index); reports test accuracy mean and std.
CvSummary cross_validate(const PreparedDataset& data, const SplitPlan& plan, const ModelConfig& model_cfg,
                         const TrainConfig& cfg,
                         const std::function<void(int fold, const EpochRecord&)>& on_record = {});

struct GradCheckOptions {
  double step = 1e-5;
  double beta = 0.1;
  bool train_mode = true;
  int retries = 3;          ///< step shrinks 10x per retry after a decision flip
  /// Denominator floor. Central differences at h = 1e-5 on an O(1) loss carry
  /// roundoff near 1e-10, so smaller derivatives are compared absolutely.
  double abs_floor = 1e-5;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  std::vector<double> grads;  ///< analytic gradient
};

/// Central finite differences on every parameter of the total loss over
/// `batch`, with routing noise and dropout frozen. Throws NumericError if a
/// perturbation keeps flipping a discrete decision after all retries.
GradCheckResult grad_check(MoseModel& model, const PreparedDataset& data, std::span<const int> batch,
                           const GradCheckOptions& opts = {});

}  // namespace mose
