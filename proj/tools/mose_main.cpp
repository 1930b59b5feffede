// mose: generate, extract, train, evaluate, verify, export-hidden.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "mose/checkpoint.hpp"
#include "mose/error.hpp"
#include "mose/experiments.hpp"
#include "mose/parallel.hpp"
#include "mose/run_config.hpp"
#include "mose/trainer.hpp"
#include "mose/verify.hpp"
#include "mose/walks.hpp"

namespace fs = std::filesystem;
using namespace mose;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_verify_failed = 1;
constexpr int exit_runtime = 2;
constexpr int exit_usage = 64;

// Every RunConfig key is accepted as --key on every subcommand; only the
// flags actually given override the config file.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file (flags override it)");
    for (const auto& key : RunConfig::keys()) options[key] = app->add_option("--" + key, values[key]);
  }

  RunConfig resolve(RunConfig cfg) const {
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) cfg.set(key, values.at(key));
    cfg.validate();
    return cfg;
  }
};

RunConfig defaults() {
  RunConfig cfg;
  cfg.threads = default_thread_count();
  return cfg;
}

std::string pattern_string(const AnonymousWalk& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "-" : "") + std::to_string(a[i]);
  return s;
}

bool same_walks(const WalkConfig& a, const WalkConfig& b) {
  return a.walk_length == b.walk_length && a.walks_per_node == b.walks_per_node &&
         a.pattern_budget == b.pattern_budget && a.subgraph_cap == b.subgraph_cap && a.seed == b.seed;
}

std::string run_kind(const Dataset& ds) { return ds.task == TaskKind::graph_level ? "fold" : "split"; }

// Reuses a matching cache file or builds one (and writes it when a path is given).
SubgraphCache obtain_cache(const Dataset& ds, const RunConfig& cfg, const std::string& path, bool* reused = nullptr) {
  if (reused) *reused = false;
  if (!path.empty() && fs::exists(path)) {
    SubgraphCache c = SubgraphCache::read(path);
    if (c.dataset == ds.name && c.members.size() == ds.graphs.size() && same_walks(c.config, cfg.walk_config())) {
      if (reused) *reused = true;
      return c;
    }
    std::cerr << "note: cache " << path << " was built with a different dataset or walk config; rebuilding\n";
  }
  SubgraphCache c = build_subgraph_cache(ds, cfg.walk_config(), cfg.threads);
  if (!path.empty()) c.write(path);
  return c;
}

int cmd_gen(const RunConfig& cfg) {
  Dataset ds;
  if (cfg.dataset == "GraphCycle")
    ds = gen_graph_cycle(cfg.count, cfg.seed);
  else if (cfg.dataset == "GraphFive")
    ds = gen_graph_five(cfg.count, cfg.seed);
  else
    throw InvalidArgument("gen: --dataset must be GraphCycle or GraphFive, got '" + cfg.dataset + "'");
  const fs::path dir = fs::path(cfg.out_dir) / ds.name;
  write_tu_dataset(ds, dir);
  write_manifest(dir / "manifest.txt", cfg, dataset_hash(ds), {{"command", "gen"}});
  std::cout << "wrote " << ds.graphs.size() << " graphs (" << ds.class_count << " classes) to " << dir.string() << '\n';
  return exit_ok;
}

int cmd_extract(const RunConfig& cfg, std::string cache_path, int top) {
  const Dataset ds = load_dataset(cfg.data_dir, cfg.dataset);
  fs::create_directories(cfg.out_dir);
  if (cache_path.empty()) cache_path = (fs::path(cfg.out_dir) / (ds.name + ".subgraphs")).string();
  if (fs::exists(cache_path)) {
    bool reused = false;
    obtain_cache(ds, cfg, cache_path, &reused);
    if (reused) {
      std::cout << "cache " << cache_path << " matches the dataset and walk config; nothing to do\n";
      write_manifest(fs::path(cfg.out_dir) / "manifest.txt", cfg, dataset_hash(ds),
                     {{"command", "extract"}, {"cache", cache_path}});
      return exit_ok;
    }
  }
  const WalkConfig walks = cfg.walk_config();
  walks.validate();
  SubgraphCache cache;
  cache.dataset = ds.name;
  cache.config = walks;
  cache.members.resize(ds.graphs.size());
  PatternCounts total;
  long singletons = 0, nodes = 0;
  const bool inner = ds.graphs.size() == 1;
  std::vector<Extraction> parts(ds.graphs.size());
  parallel_for(ds.graphs.size(), inner ? 1 : cfg.threads, [&](std::size_t g) {
    parts[g] = extract_all(ds.graphs[g], walks, g, inner ? cfg.threads : 1);
  });
  for (std::size_t g = 0; g < parts.size(); ++g) {
    for (const auto& [p, c] : parts[g].counts) total[p] += c;
    singletons += parts[g].singleton_count;
    nodes += static_cast<long>(parts[g].subgraphs.size());
    for (const auto& s : parts[g].subgraphs) cache.members[g].push_back(s.parent_ids);
  }
  cache.write(cache_path);

  std::cout << "pattern,count\n";
  const auto order = top_patterns(total, top > 0 ? top : static_cast<int>(total.size()));
  for (const auto& p : order) std::cout << pattern_string(p) << ',' << total.at(p) << '\n';
  std::cout << "# " << total.size() << " distinct patterns over " << ds.graphs.size() << " graphs; " << singletons
            << "/" << nodes << " nodes fell back to singleton subgraphs\n";
  std::cout << "# cache written to " << cache_path << '\n';
  write_manifest(fs::path(cfg.out_dir) / "manifest.txt", cfg, dataset_hash(ds),
                 {{"command", "extract"}, {"cache", cache_path}, {"singletons", std::to_string(singletons)}});
  return exit_ok;
}

// Config without execution-only keys; checkpoints store this so they do not
// depend on the thread count or where they were written.
ConfigEntries comparable(ConfigEntries e) {
  std::erase_if(e, [](const auto& kv) { return kv.first == "threads" || kv.first == "out-dir"; });
  return e;
}

int cmd_train(const RunConfig& cfg, const std::string& cache_path, bool resume) {
  const Dataset ds = load_dataset(cfg.data_dir, cfg.dataset);
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  const PreparedDataset data = prepare_dataset(ds, obtain_cache(ds, cfg, cache_path), cfg.gate_activation, cfg.threads);
  const std::string kind = run_kind(ds);
  auto csv_path = [&](int run) { return out / ("metrics_" + kind + std::to_string(run) + ".csv"); };
  auto ckpt_path = [&](int run) { return out / ("checkpoint_" + kind + std::to_string(run) + ".txt"); };

  std::map<int, std::ofstream> csv;
  auto stream = [&](int run) -> std::ofstream& {
    auto it = csv.find(run);
    if (it == csv.end()) {
      it = csv.emplace(run, std::ofstream(csv_path(run))).first;
      if (!it->second) throw IoError("cannot write " + csv_path(run).string());
      it->second << metrics_csv_header(cfg.experts) << '\n';
    }
    return it->second;
  };
  std::set<int> restored_runs;

  RunHooks hooks;
  hooks.on_record = [&](int run, const EpochRecord& r) { stream(run) << metrics_csv_row(r) << '\n'; };
  hooks.on_finished = [&](int run, const MoseModel& model, const TrainResult& res) {
    if (restored_runs.count(run)) return;
    stream(run).flush();
    write_checkpoint(ckpt_path(run), model, {cfg.seed, res.best_epoch, comparable(cfg.entries())});
  };
  if (resume) {
    hooks.restore = [&](int run) -> std::optional<MoseModel> {
      if (!fs::exists(ckpt_path(run)) || !fs::exists(csv_path(run))) return std::nullopt;
      Checkpoint c = read_checkpoint(ckpt_path(run));
      if (comparable(c.meta.config) != comparable(cfg.entries())) {
        std::cerr << "note: " << ckpt_path(run).string() << " has a different config; retraining\n";
        return std::nullopt;
      }
      restored_runs.insert(run);
      std::cout << "resumed " << kind << ' ' << run << " from " << ckpt_path(run).string() << '\n';
      return std::move(c.model);
    };
  }

  RunSummary summary;
  try {
    summary = run_experiment(ds, data, cfg, hooks);
  } catch (const NumericError& e) {
    std::ofstream dump(out / "numeric_error.txt");
    dump << e.what() << '\n';
    throw;
  }

  std::ofstream sum(out / "summary.csv");
  sum << kind << ",accuracy,macro_f1\n";
  char line[128];
  for (std::size_t i = 0; i < summary.accuracy.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", i, summary.accuracy[i], summary.macro_f1[i]);
    sum << line;
  }
  std::snprintf(line, sizeof line, "mean,%.17g,\nstd,%.17g,\n", summary.mean, summary.std);
  sum << line;

  std::printf("%s: test accuracy %.2f +- %.2f %% over %zu %ss\n", ds.name.c_str(), 100 * summary.mean,
              100 * summary.std, summary.accuracy.size(), kind.c_str());
  char mean[64];
  std::snprintf(mean, sizeof mean, "%.17g", summary.mean);
  write_manifest(out / "manifest.txt", cfg, dataset_hash(ds), {{"command", "train"}, {"test-accuracy-mean", mean}});
  return exit_ok;
}

int cmd_evaluate(const ConfigFlags& flags, const std::string& checkpoint,
                 const std::string& cache_path) {
  Checkpoint c = read_checkpoint(checkpoint);
  // Checkpoint config first, then explicit flags.
  RunConfig cfg = defaults();
  for (const auto& [k, v] : c.meta.config) cfg.set(k, v);
  cfg = flags.resolve(cfg);
  const Dataset ds = load_dataset(cfg.data_dir, cfg.dataset);
  const PreparedDataset data = prepare_dataset(ds, obtain_cache(ds, cfg, cache_path), cfg.gate_activation, cfg.threads);
  if (data.feature_dim != c.model.config().feature_dim || data.class_count != c.model.config().class_count)
    throw InvalidArgument("evaluate: checkpoint model does not match the dataset shape");
  std::vector<int> ids(data.item_count());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  if (data.task == TaskKind::node_level) std::erase_if(ids, [&](int v) { return data.label(v) < 0; });
  const Metrics m = evaluate(c.model, data, ids, cfg.threads);
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  EpochRecord rec;
  rec.epoch = c.meta.epoch;
  rec.split = "all";
  rec.loss_task = m.loss_task;
  rec.loss_importance = m.loss_importance;
  rec.accuracy = m.accuracy;
  rec.macro_f1 = m.macro_f1;
  rec.expert_load = m.expert_load;
  std::ofstream csv(out / "evaluation.csv");
  csv << metrics_csv_header(c.model.config().experts) << '\n' << metrics_csv_row(rec) << '\n';
  std::printf("%s: accuracy %.2f %%, macro-F1 %.4f on %zu items\n", ds.name.c_str(), 100 * m.accuracy, m.macro_f1,
              ids.size());
  write_manifest(out / "manifest.txt", cfg, dataset_hash(ds), {{"command", "evaluate"}, {"checkpoint", checkpoint}});
  return exit_ok;
}

int cmd_verify(const RunConfig& cfg, const std::string& suite, VerifyOptions vo, int criterion) {
  vo.seed = cfg.seed;
  vo.threads = cfg.threads;
  vo.report_dir = cfg.out_dir;
  std::vector<CheckResult> results;
  if (suite == "experiments") {
    ExperimentOptions eo;
    eo.data_dir = cfg.data_dir;
    eo.seed = cfg.seed;
    eo.threads = cfg.threads;
    using Fn = CheckResult (*)(const ExperimentOptions&);
    const std::map<int, Fn> checks{{7, check_load_balancing}, {8, check_mutag},          {9, check_node_tasks},
                                   {10, check_graph_cycle},   {11, check_runtime_scaling}, {12, check_determinism}};
    for (const auto& [n, fn] : checks)
      if (criterion == 0 || criterion == n) results.push_back(fn(eo));
  } else {
    for (auto& r : run_suite(suite, vo))
      if (criterion == 0 || criterion == r.criterion) results.push_back(std::move(r));
  }
  if (results.empty()) throw InvalidArgument("verify: suite '" + suite + "' has no criterion " + std::to_string(criterion));
  bool ok = true;
  for (const auto& r : results) {
    print_result(std::cout, r);
    ok = ok && r.status != CheckStatus::fail;
  }
  fs::create_directories(cfg.out_dir);
  write_manifest(fs::path(cfg.out_dir) / "manifest.txt", cfg, 0, {{"command", "verify"}, {"suite", suite}});
  return ok ? exit_ok : exit_verify_failed;
}

int cmd_export_hidden(const RunConfig& cfg, const std::string& checkpoint) {
  const Checkpoint c = read_checkpoint(checkpoint);
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  const ModelConfig& mc = c.model.config();
  int files = 0;
  for (int k = 0; k < mc.experts; ++k)
    for (int i = 0; i < mc.hidden_graphs; ++i) {
      const std::string name = "expert" + std::to_string(k) + "_hg" + std::to_string(i);
      std::ofstream f(out / (name + ".dot"));
      if (!f) throw IoError("cannot write " + (out / (name + ".dot")).string());
      f << hidden_graph_dot(c.model.hidden_graph(k, i), cfg.prune_threshold, name);
      ++files;
    }
  std::cout << "wrote " << files << " DOT files to " << out.string() << '\n';
  write_manifest(out / "manifest.txt", cfg, 0, {{"command", "export-hidden"}, {"checkpoint", checkpoint}});
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MoSE: subgraph-expert graph kernels"};
  app.require_subcommand(1);

  ConfigFlags gen_flags, extract_flags, train_flags, eval_flags, verify_flags, export_flags;
  auto* gen = app.add_subcommand("gen", "generate GraphCycle / GraphFive in TU format");
  gen_flags.attach(gen);

  auto* extract = app.add_subcommand("extract", "anonymous-walk subgraph extraction and pattern table");
  extract_flags.attach(extract);
  std::string extract_cache;
  int top = 20;
  extract->add_option("--cache", extract_cache, "cache file (default <out-dir>/<dataset>.subgraphs)");
  extract->add_option("--top", top, "patterns to print (0 = all)");

  auto* train_cmd = app.add_subcommand("train", "train with k-fold CV (graph tasks) or seeded splits (node tasks)");
  train_flags.attach(train_cmd);
  std::string train_cache;
  bool resume = false;
  train_cmd->add_option("--cache", train_cache, "subgraph cache to reuse or create");
  train_cmd->add_flag("--resume", resume, "reuse finished runs from checkpoints in --out-dir");

  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
  eval_flags.attach(eval);
  std::string eval_ckpt, eval_cache;
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--cache", eval_cache);

  auto* verify = app.add_subcommand("verify", "acceptance checks; exit 1 on failure");
  verify_flags.attach(verify);
  std::string suite;
  VerifyOptions vo;
  int criterion = 0;
  verify->add_option("suite", suite, "kernel-oracle | grad | walks | wl | experiments")
      ->required()
      ->check(CLI::IsMember({"kernel-oracle", "grad", "walks", "wl", "experiments"}));
  verify->add_option("--max-nodes", vo.max_nodes, "exhaustive kernel-oracle corpus size");
  verify->add_option("--max-p", vo.max_p);
  verify->add_option("--random-pairs", vo.random_pairs);
  verify->add_option("--identity-instances", vo.identity_instances);
  verify->add_option("--grad-instances", vo.grad_instances);
  verify->add_option("--fuzz-walks", vo.fuzz_walks);
  verify->add_option("--relabel-pairs", vo.relabel_pairs);
  verify->add_option("--rooted-pairs", vo.rooted_pairs);
  verify->add_option("--inits", vo.inits);
  verify->add_option("--wl-max-nodes", vo.wl_max_nodes);
  verify->add_option("--criterion", criterion, "run a single criterion of the suite");

  auto* exp = app.add_subcommand("export-hidden", "write expert<k>_hg<i>.dot for every hidden graph");
  export_flags.attach(exp);
  std::string export_ckpt;
  exp->add_option("--checkpoint", export_ckpt)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*gen) return cmd_gen(gen_flags.resolve(defaults()));
    if (*extract) return cmd_extract(extract_flags.resolve(defaults()), extract_cache, top);
    if (*train_cmd) return cmd_train(train_flags.resolve(defaults()), train_cache, resume);
    if (*eval) return cmd_evaluate(eval_flags, eval_ckpt, eval_cache);
    if (*verify) return cmd_verify(verify_flags.resolve(defaults()), suite, vo, criterion);
    if (*exp) return cmd_export_hidden(export_flags.resolve(defaults()), export_ckpt);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_usage;
}
