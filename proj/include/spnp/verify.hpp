#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace spnp {

struct CheckResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

struct VerifyOptions {
  /// Scratch space for experiment outputs; a temp directory when empty.
  std::filesystem::path work_dir;
  /// Skips the score-network training check.
  bool skip_training = false;
};

/// Oracle suites, numbered 1..8. Each check passes only if its numeric
/// conditions hold and it finishes within its time limit.
int check_count();
CheckResult run_check(int id, const VerifyOptions& options = {});

/// Runs every check, invoking `report` after each one.
std::vector<CheckResult> run_all_checks(const VerifyOptions& options,
                                        const std::function<void(const CheckResult&)>& report);

/// "PASS [n] title (1.23 s / 10 s): detail"
std::string format_check(const CheckResult& r);

}  // namespace spnp
