// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   mose_acceptance [--only N] [--data-dir DIR] [--cli PATH] [--work-dir DIR]
//                   [--seed S] [--threads T]
//
// Exit status: 0 all run criteria passed, 1 a failure, 77 every run criterion
// was skipped.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mose/experiments.hpp"
#include "mose/parallel.hpp"
#include "mose/verify.hpp"

namespace fs = std::filesystem;
using namespace mose;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs `cli` with the given arguments; returns its exit status.
int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Criterion 12 end to end: the same commands under different --threads values
// produce byte-identical metrics CSVs and subgraph caches.
CheckResult cli_determinism(const std::string& cli, const fs::path& data_dir, const fs::path& work,
                            std::uint64_t seed) {
  CheckResult r;
  r.criterion = 12;
  r.name = "determinism across thread counts (CLI)";
  const auto t0 = std::chrono::steady_clock::now();
  const std::string common = "--data-dir \"" + data_dir.string() + "\" --dataset MUTAG --seed " + std::to_string(seed);
  std::vector<int> threads{1, 3, 8};
  std::vector<std::map<std::string, std::string>> outputs;
  for (int t : threads) {
    const fs::path dir = work / ("threads" + std::to_string(t));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string out = " --out-dir \"" + dir.string() + "\" --threads " + std::to_string(t);
    const int e = run_cli(cli, "extract " + common + out + " --cache \"" + (dir / "mutag.subgraphs").string() + "\"",
                          dir / "extract.log");
    const int tr = run_cli(cli, "train " + common + out + " --folds 2 --epochs 4", dir / "train.log");
    if (e != 0 || tr != 0) {
      r.failures.push_back("threads " + std::to_string(t) + ": extract exit " + std::to_string(e) + ", train exit " +
                           std::to_string(tr) + " (see " + dir.string() + ")");
      continue;
    }
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.ends_with(".csv") || name.ends_with(".subgraphs") || name.starts_with("checkpoint_"))
        files[name] = slurp(entry.path());
    }
    outputs.push_back(std::move(files));
  }
  bool ok = r.failures.empty() && outputs.size() == threads.size() && !outputs[0].empty();
  std::size_t compared = 0;
  for (std::size_t i = 1; ok && i < outputs.size(); ++i) {
    if (outputs[i].size() != outputs[0].size()) {
      ok = false;
      r.failures.push_back("different output file sets");
    }
    for (const auto& [name, content] : outputs[0]) {
      auto it = outputs[i].find(name);
      ++compared;
      if (it == outputs[i].end() || it->second != content) {
        ok = false;
        r.failures.push_back(name + " differs between --threads 1 and --threads " + std::to_string(threads[i]));
      }
    }
  }
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.detail = "mose extract + train (2 folds, 4 epochs) with --threads 1, 3, 8: " + std::to_string(compared) +
             " file comparisons, " + (ok ? "all byte-identical" : "mismatch");
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MoSE acceptance suite"};
  int only = 0;
  std::string data_dir = MOSE_TEST_DATA_DIR;
  std::string cli = MOSE_CLI_PATH;
  std::string work = (fs::temp_directory_path() / "mose_acceptance").string();
  std::uint64_t seed = 0;
  int threads = default_thread_count();
  app.add_option("--only", only, "run a single criterion (1-12)")->check(CLI::Range(0, 12));
  app.add_option("--data-dir", data_dir);
  app.add_option("--cli", cli, "mose executable for the end-to-end determinism check");
  app.add_option("--work-dir", work);
  app.add_option("--seed", seed);
  app.add_option("--threads", threads);
  CLI11_PARSE(app, argc, argv);

  VerifyOptions vo;
  vo.seed = seed;
  vo.threads = threads;
  vo.report_dir = fs::path(work) / "wl";
  ExperimentOptions eo;
  eo.data_dir = data_dir;
  eo.seed = seed;
  eo.threads = threads;

  std::vector<CheckResult> results;
  auto want = [&](int n) { return only == 0 || only == n; };
  try {
    if (want(1)) results.push_back(check_kernel_oracle(vo));
    if (want(2)) results.push_back(check_kernel_identity(vo));
    if (want(3)) results.push_back(check_gradients(vo));
    if (want(4)) results.push_back(check_anonymous_walks(vo));
    if (want(5)) results.push_back(check_walk_distinguishing(vo));
    if (want(6)) results.push_back(check_expressivity(vo));
    if (want(7)) results.push_back(check_load_balancing(eo));
    if (want(8)) results.push_back(check_mutag(eo));
    if (want(9)) results.push_back(check_node_tasks(eo));
    if (want(10)) results.push_back(check_graph_cycle(eo));
    if (want(11)) results.push_back(check_runtime_scaling(eo));
    if (want(12)) {
      results.push_back(check_determinism(eo));
      results.push_back(cli_determinism(cli, data_dir, fs::path(work) / "determinism", seed));
    }
  } catch (const std::exception& e) {
    std::cout << "FAIL criterion " << only << ": exception: " << e.what() << '\n';
    return 1;
  }

  bool failed = false, all_skipped = true;
  for (const auto& r : results) {
    print_result(std::cout, r);
    failed = failed || r.status == CheckStatus::fail;
    all_skipped = all_skipped && r.status == CheckStatus::skip;
  }
  if (failed) return 1;
  return all_skipped && !results.empty() ? 77 : 0;
}
