#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cocycle/verify.hpp"

namespace cocycle::runner {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // verify failures, I/O errors
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDegenerate = 3;

/// Environment variable naming the default output root.
inline constexpr const char* kOutEnv = "COCYCLE_LAB_OUT";

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;    // overrides the config's seed
  unsigned workers = 1;
  std::optional<std::string> out_dir;   // overrides [output] dir
};

struct RunResult {
  int exit_code = kExitOk;
  std::string out_dir;
  std::string message;  // empty on success
};

/// Output directory: --out, else [output] dir, else $COCYCLE_LAB_OUT/<experiment>,
/// else cocycle-lab-out/<experiment>. Writes summary.json, one CSV per table,
/// resolved_config.ini, and error.txt on failure.
RunResult run(const RunOptions& opt);

/// Sorted experiment names accepted by `run`.
std::vector<std::string> experiment_names();

/// Builtin potentials with (alpha, B_0, B_alpha, B_1), then named frequencies
/// with their first 8 convergents.
std::string list_builtins();

/// Runs a suite, prints one line per check to `os`, writes
/// verify-<suite>.xml and verify-<suite>.txt into out_dir. Returns 0 iff all pass.
int verify_command(verify::Suite suite, const verify::Options& opt, const std::string& out_dir, std::ostream& os);

}  // namespace cocycle::runner
