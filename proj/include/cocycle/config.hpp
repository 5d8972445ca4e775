#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocycle/potential.hpp"
#include "cocycle/torus_dynamics.hpp"

namespace cocycle::config {

/// Malformed file, unknown key, bad value. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { String, Integer, Real, RealOrAuto, IntList, StringList, Grid, Point };

struct KeySpec {
  std::string key;  // "section.name", or "name" at top level
  ValueType type;
  std::string fallback;  // canonical default, empty when there is none
  std::string help;
};

/// Every accepted key, in the order the resolved config is written.
const std::vector<KeySpec>& schema();

/// "min:max:count" expanded to count evenly spaced points.
std::vector<double> parse_grid(const std::string& text);

/// A parsed and validated configuration. Values are kept in canonical text
/// form (reals with 17 significant digits) so the resolved echo re-parses to
/// the same configuration.
class ExperimentConfig {
 public:
  /// Reads INI (default) or JSON (".json" suffix or a leading '{').
  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig parse_ini(const std::string& text);
  static ExperimentConfig parse_json(const std::string& text);

  [[nodiscard]] bool has(const std::string& key) const;
  [[nodiscard]] std::string text(const std::string& key) const;
  [[nodiscard]] std::string str(const std::string& key) const { return text(key); }
  [[nodiscard]] std::int64_t integer(const std::string& key) const;
  [[nodiscard]] double real(const std::string& key) const;
  /// nullopt for "auto".
  [[nodiscard]] std::optional<double> real_or_auto(const std::string& key) const;
  [[nodiscard]] std::vector<std::int64_t> int_list(const std::string& key) const;
  [[nodiscard]] std::vector<std::string> string_list(const std::string& key) const;
  [[nodiscard]] std::vector<double> grid(const std::string& key) const;
  [[nodiscard]] TorusPoint point(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

  [[nodiscard]] std::string experiment() const { return text("experiment"); }
  [[nodiscard]] std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }

  /// Potential from [potential] name / grid_file / alpha.
  [[nodiscard]] Potential potential() const;
  /// Dynamics from [dynamics] kind / omega / omega1 / omega2.
  [[nodiscard]] Dynamics dynamics() const;

  /// INI text with every schema key that has a value, defaults filled in.
  [[nodiscard]] std::string resolved_ini() const;

 private:
  static ExperimentConfig from_raw(const std::map<std::string, std::string>& raw);

  std::map<std::string, std::string> values_;
};

/// Frequency literal or named constant ("golden", "silver", "golden2", "pi").
double parse_frequency(const std::string& text);

}  // namespace cocycle::config
