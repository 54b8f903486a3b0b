// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Usage: acceptance [criterion ...]

#include "spnp/verify.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) {
    for (int id = 1; id <= spnp::check_count(); ++id) ids.push_back(id);
  }
  int failed = 0;
  for (int id : ids) {
    const spnp::CheckResult r = spnp::run_check(id);
    std::printf("%s\n", spnp::format_check(r).c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(ids.size()) - failed, ids.size());
  return failed == 0 ? 0 : 1;
}
