#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cocycle::verify {

enum class Suite { Identities, Statistics, All };

/// Parses "identities", "statistics" or "all".
Suite parse_suite(const std::string& name);
std::string suite_name(Suite s);

struct Options {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  /// Fault-injected CLIs run by the mutation check (C11).
  std::vector<std::string> fault_binaries;
  /// Scratch directory for the mutation check.
  std::string scratch_dir;
};

struct CheckResult {
  std::string id;      // "C1" .. "C11", or "S1" for the long-window scaling check
  std::string title;
  std::string suite;   // identities | statistics | mutation
  bool numeric_ok = false;
  double seconds = 0.0;
  double budget = 0.0;  // wall-clock ceiling in seconds
  std::string detail;   // measured figures, deterministic for a fixed seed

  [[nodiscard]] bool pass() const { return numeric_ok && seconds < budget; }
};

/// Runs one check by id.
CheckResult run_check(const std::string& id, const Options& opt);

/// Ids in a suite: identities = C1-C4 and S1, statistics = C5-C10, all adds C11.
std::vector<std::string> suite_checks(Suite s);

std::vector<CheckResult> run_suite(Suite s, const Options& opt);

/// "PASS C3 ..." line without timings, so reports are reproducible.
std::string report_line(const CheckResult& r);

/// JUnit-style XML. Timings are left out for the same reason; a check that
/// overran its budget is reported as a failure with the budget in the message.
std::string junit_xml(const std::string& suite, const std::vector<CheckResult>& results);

}  // namespace cocycle::verify
