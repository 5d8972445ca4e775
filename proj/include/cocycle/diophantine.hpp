#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace cocycle::diophantine {

using HighPrecision = boost::multiprecision::cpp_bin_float_100;

/// Distance from t to the nearest integer, ||t||.
double torus_norm(double t);

/// A frequency on T (dim 1) or T^2 (dim 2).
struct Frequency {
  int dim = 1;
  std::array<double, 2> w{0.0, 0.0};

  static Frequency one(double w1) { return {1, {w1, 0.0}}; }
  static Frequency two(double w1, double w2) { return {2, {w1, w2}}; }
};

/// Named constants: "golden" = (sqrt 5 - 1)/2, "silver" = sqrt 2 - 1,
/// "golden2" = golden^2, "pi" = pi - 3. Throws std::invalid_argument if unknown.
HighPrecision named_constant(std::string_view name);
std::vector<std::string> named_constants();

/// The frequency pair used for 2-D shifts: (golden, sqrt 2 - 1).
Frequency golden_pair();

struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
};

/// Expansion omega = [0; a_1, a_2, ...] with convergents p_s / q_s, s >= 1.
/// Index conventions follow the recurrences q_s = a_s q_{s-1} + q_{s-2},
/// q_0 = 1, q_{-1} = 0 and p_0 = 0, p_{-1} = 1.
struct ContinuedFraction {
  double omega = 0.0;
  std::vector<std::int64_t> partial_quotients;  // a_1, a_2, ...
  std::vector<Convergent> convergents;          // (p_1, q_1), (p_2, q_2), ...
  bool rational = false;                        // expansion terminated exactly

  [[nodiscard]] int depth() const { return static_cast<int>(partial_quotients.size()); }
  /// a_s for 1 <= s <= depth().
  [[nodiscard]] std::int64_t a(int s) const;
  /// p_s, q_s for -1 <= s <= depth().
  [[nodiscard]] std::int64_t p(int s) const;
  [[nodiscard]] std::int64_t q(int s) const;
};

/// Expansion of omega in (0, 1). omega is first quantized to a 2^-200 rational
/// shadow; expansion stops at max_depth, when the next q_s would exceed 2^53, or
/// when the shadow is exhausted (rational = true).
ContinuedFraction continued_fraction(double omega, int max_depth = 64);
ContinuedFraction continued_fraction(const HighPrecision& omega, int max_depth = 64);

/// a_{s+1} / q_{s+1} for the smallest s >= 1 with m < q_s. Throws
/// std::out_of_range when m < 1 or no stored s has both m < q_s and a_{s+1}.
double komega_lower_bound(const ContinuedFraction& cf, std::int64_t m);

/// Smallest s >= 1 with q_{s-1} <= n < q_s, or nullopt past the stored depth.
std::optional<int> bracketing_scale(const ContinuedFraction& cf, std::int64_t n);

struct LatticeMinimum {
  std::array<std::int64_t, 2> k{0, 0};
  double value = 0.0;
};

/// min over 1 <= |k| <= n of ||k . omega||; in 2-D k ranges over the box
/// |k1|, |k2| <= n modulo k -> -k. Ties go to the first k in the order k1 = 0, 1, ...,
/// then k2 = 0, 1, -1, 2, -2, ...
LatticeMinimum min_komega(const Frequency& omega, std::int64_t n);

struct ClassifyParams {
  double c = 0.1;
  double A = 3.0;
  std::int64_t N = 100;
  double gamma1 = 0.5;
  double gamma2 = 0.5;
  double eps = 0.2;
  /// Search cutoff for the unbounded condition; 0 selects 10^5 (1-D) or 10^3 (2-D).
  std::int64_t full_cutoff = 0;
};

struct Witness {
  std::array<std::int64_t, 2> k{0, 0};
  double norm = 0.0;       // ||k . omega||
  double threshold = 0.0;  // the bound it fails
};

struct FlagResult {
  bool holds = true;
  std::optional<Witness> witness;  // set iff !holds
  std::int64_t checked_up_to = 0;  // largest |k| examined
};

struct FrequencyClass {
  FlagResult dioph_full;                 // verified up to checked_up_to only
  FlagResult dioph_window;
  std::optional<FlagResult> in_T_ceN;    // only defined for 1-D frequencies
};

FrequencyClass classify_frequency(const Frequency& omega, const ClassifyParams& params);

struct BadGridScan {
  int dim = 1;
  std::vector<std::array<std::int64_t, 2>> indices;  // j (1-D uses indices[i][0])
  double bound = 0.0;               // 2 mu N0 Nbar + N0^2 (1-D), mu N0^2 Nbar^2 + N0^3 Nbar (2-D)
  double measured_constant = 0.0;   // (|J| - mu N0^2 Nbar^2) / (N0^3 Nbar), 2-D only
};

/// Grid frequencies omega_j = j / Nbar (componentwise in 2-D), j in [1, Nbar]^dim,
/// with min_{1<=|k|<=N0} ||k . omega_j|| < mu. Exact integer arithmetic.
BadGridScan bad_grid_scan(std::int64_t n_bar, std::int64_t n0, double mu, int grid_dim);

}  // namespace cocycle::diophantine
