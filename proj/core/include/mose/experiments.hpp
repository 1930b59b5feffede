#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <filesystem>
#include <string>
#include <vector>

#include "mose/data_io.hpp"
#include "mose/run_config.hpp"
#include "mose/verify.hpp"

namespace mose {

/// Node datasets in the Geom-GCN layout (texas, cornell, wisconsin, ...) live
/// in `<data-dir>/<name>/`; TU datasets in `<data-dir>/<name>/` or directly in
/// `<data-dir>`. Throws IoError when neither exists.
Dataset load_dataset(const std::filesystem::path& data_dir, const std::string& name);
bool is_node_dataset_name(const std::string& name);

/// Test records of a full run under `cfg`: k-fold for graph tasks, `splits`
/// seeded mask splits for node tasks. Every epoch record (prefixed with the
/// fold or split index) is passed to `on_record`.
struct RunSummary {
  std::vector<double> accuracy;  ///< per fold or split
  std::vector<double> macro_f1;
  double mean = 0.0;
  double std = 0.0;
  std::vector<TrainResult> runs;
};
struct RunHooks {
  std::function<void(int run, const EpochRecord&)> on_record;
  /// Called after each run with the restored best model.
  std::function<void(int run, const MoseModel&, const TrainResult&)> on_finished;
  /// Returns a finished model to reuse instead of training run `run`.
  std::function<std::optional<MoseModel>(int run)> restore;
};
RunSummary run_experiment(const Dataset& ds, const RunConfig& cfg, const RunHooks& hooks = {});
/// Same, on an already prepared dataset.
RunSummary run_experiment(const Dataset& ds, const PreparedDataset& data, const RunConfig& cfg,
                          const RunHooks& hooks = {});

/// Header `epoch,split,loss_task,loss_importance,accuracy,macro_f1,expert_load_0..` .
/// Multi-run commands write one file per fold or split.
std::string metrics_csv_header(int experts);
/// One CSV row; doubles printed with %.17g so reruns compare byte for byte.
std::string metrics_csv_row(const EpochRecord& r);

struct ExperimentOptions {
  std::filesystem::path data_dir;  ///< holds MUTAG/, texas/, cornell/
  std::uint64_t seed = 0;
  int threads = 1;
  int epochs = -1;  ///< override for smoke runs; -1 keeps each check's setting
};

CheckResult check_load_balancing(const ExperimentOptions& opts);  // 7
CheckResult check_mutag(const ExperimentOptions& opts);           // 8
CheckResult check_node_tasks(const ExperimentOptions& opts);      // 9
CheckResult check_graph_cycle(const ExperimentOptions& opts);     // 10
CheckResult check_runtime_scaling(const ExperimentOptions& opts); // 11
/// In-process half of criterion 12: the MUTAG metrics CSV of a short run is
/// identical for 1, 2 and 4 threads.
CheckResult check_determinism(const ExperimentOptions& opts);     // 12

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mose
