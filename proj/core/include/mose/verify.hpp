#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mose {

enum class CheckStatus { pass, fail, skip };

struct CheckResult {
  int criterion = 0;
  std::string name;
  CheckStatus status = CheckStatus::fail;
  std::string detail;    ///< one-line summary with the measured numbers
  std::vector<std::string> failures;  ///< per-case diffs (truncated)
  double seconds = 0.0;

  bool passed() const noexcept { return status == CheckStatus::pass; }
};

/// "PASS criterion 3 (gradients): ... [12.3 s]" plus indented failures.
void print_result(std::ostream& out, const CheckResult& r, std::size_t max_failures = 10);

struct VerifyOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  int max_nodes = 5;        ///< exhaustive kernel-oracle corpus size
  int max_p = 4;
  int random_pairs = 200;
  int identity_instances = 500;
  int grad_instances = 100;
  int fuzz_walks = 10000;
  int relabel_pairs = 1000;
  int enumeration_graphs = 50;
  int rooted_pairs = 200;
  int inits = 100;
  int wl_max_nodes = 6;
  std::filesystem::path report_dir;  ///< pair-corpus CSV goes here when set
};

CheckResult check_kernel_oracle(const VerifyOptions& opts);        // 1
CheckResult check_kernel_identity(const VerifyOptions& opts);      // 2
CheckResult check_gradients(const VerifyOptions& opts);            // 3
CheckResult check_anonymous_walks(const VerifyOptions& opts);      // 4
CheckResult check_walk_distinguishing(const VerifyOptions& opts);  // 5
CheckResult check_expressivity(const VerifyOptions& opts);         // 6

/// Suites of `mose verify`: kernel-oracle (1, 2), grad (3), walks (4, 5), wl (6).
std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& opts);

}  // namespace mose
