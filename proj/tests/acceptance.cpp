// Acceptance run: one PASS/FAIL line per criterion C1-C11, tolerances fixed in
// the checks themselves. Arguments: the three fault-injected CLIs for C11.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "cocycle/verify.hpp"

int main(int argc, char** argv) {
  using namespace cocycle::verify;
  Options opt;
  opt.seed = 1;
  opt.workers = 4;
  for (int i = 1; i < argc; ++i) opt.fault_binaries.emplace_back(argv[i]);
  opt.scratch_dir = (std::filesystem::temp_directory_path() / "cocycle-acceptance").string();

  const std::vector<std::string> ids{"C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11"};
  int failed = 0;
  for (const auto& id : ids) {
    const auto r = run_check(id, opt);
    std::printf("%s (%.2f s of %.0f s)\n", report_line(r).c_str(), r.seconds, r.budget);
    std::fflush(stdout);
    failed += r.pass() ? 0 : 1;
  }
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed == 0 ? 0 : 1;
}
