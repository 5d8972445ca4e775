#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cocycle/parallel.hpp"
#include "cocycle/potential.hpp"
#include "cocycle/stats.hpp"
#include "cocycle/torus_dynamics.hpp"

namespace cocycle::ergodic {

/// Offset tensor midpoint rule on T^2: nodes ((i + t1)/M, (j + t2)/M). The
/// irrational offsets keep nodes off the lines where builtin potentials vanish.
struct Quadrature {
  std::size_t m = 1024;
  double theta1 = 0.41421356237309515;
  double theta2 = 0.7320508075688772;
};

/// Mean of f over the quadrature nodes (row sums compensated).
template <class F>
double tensor_average(F&& f, const Quadrature& q = {}) {
  const auto md = static_cast<double>(q.m);
  CompensatedSum total;
  for (std::size_t i = 0; i < q.m; ++i) {
    const double x1 = (static_cast<double>(i) + q.theta1) / md;
    CompensatedSum row;
    for (std::size_t j = 0; j < q.m; ++j) row.add(f(TorusPoint{x1, (static_cast<double>(j) + q.theta2) / md}));
    total.add(row.value());
  }
  return total.value() / (md * md);
}

/// h_tau(y) = c_tau (1 - (y/tau)^2)^5 on |y| < tau, periodized, unit mass.
class Mollifier {
 public:
  explicit Mollifier(double tau);

  [[nodiscard]] double tau() const { return tau_; }
  /// Value at y (any real; reduced mod 1).
  [[nodiscard]] double operator()(double y) const { return derivative(0, y); }
  /// m-th derivative, 0 <= m <= 5.
  [[nodiscard]] double derivative(int m, double y) const;

  /// C_m with sup |h^(m)| = C_m tau^-(m+1), m = 0..4.
  static std::array<double, 5> derivative_constants();
  /// L1 norms of p^(m)/int p for p(u) = (1 - u^2)^5, so ||h^(m)||_1 = tau^-m times this.
  static std::array<double, 5> l1_constants();

 private:
  double tau_;
};

/// rho_delta(y) = |y| outside (-delta, delta) and delta/2 + y^2/(2 delta) inside.
struct RegularizedAbs {
  double delta;
  [[nodiscard]] double operator()(double y) const;
};

/// Plateau 1 on [-delta, delta], cubic smoothstep to 0 at +-2 delta.
double chi_delta(double y, double delta);

struct ExpSum {
  std::complex<double> value;
  double bound = 0.0;
};

/// S = sum_{m=1}^N e(m theta) and the bound 2N / (1 + N ||theta||).
ExpSum exp_sum_linear(double theta, std::int64_t n);

struct WeylSum {
  std::complex<double> value;
  double reference = 0.0;  // N^{1/2 + eps}
};

/// S = sum_{k=1}^N e(k^2 alpha + k beta).
WeylSum weyl_sum_quadratic(double alpha, double beta, std::int64_t n, double eps = 0.1);

/// sum_{k=1}^N min(N, ||k alpha||^-1).
double min_inv_sum(double alpha, std::int64_t n);
/// c^-1 N^{1+eps} log N, the comparison figure for Diophantine alpha.
double min_inv_sum_reference(std::int64_t n, double c, double eps);

struct MollifyResult {
  Potential psi = Potential::constant(0.0);
  std::size_t grid = 0;
  double max_deviation = 0.0;  // max |f - psi| over the grid nodes
  double bound = 0.0;          // B_alpha(f) tau^alpha
  /// Upper bounds for sup |d^m psi / dx_i^m|, m = 0..4.
  std::array<double, 5> derivative_bounds{};
};

/// psi = f * (h_tau x h_tau) by periodic convolution on an M x M grid,
/// M = max(512, ceil(8 / tau)). Throws std::invalid_argument unless 0 < tau < 1/4.
MollifyResult mollify(const Potential& f, double tau);

struct BirkhoffReport {
  double orbit_average = 0.0;
  double space_average = 0.0;
  double gap = 0.0;
};

/// N^-1 sum_{m=1}^N psi(T^m x) against the quadrature average of psi.
BirkhoffReport birkhoff_vs_space(const Potential& psi, const Dynamics& dyn, TorusPoint x, std::int64_t n,
                                 const Quadrature& q = {});
/// Same with a precomputed space average.
BirkhoffReport birkhoff_vs_space(const Potential& psi, const Dynamics& dyn, TorusPoint x, std::int64_t n,
                                 double space_average);

/// Values of f at the quadrature nodes, sorted, for repeated level-set queries.
class LevelSetSampler {
 public:
  explicit LevelSetSampler(const Potential& f, const Quadrature& q = {});

  /// Fraction of nodes with |f - xi| < delta.
  [[nodiscard]] double measure(double xi, double delta) const;

 private:
  std::vector<double> sorted_;
};

struct LevelSetReport {
  std::int64_t hits = 0;        // #{1 <= k <= N : |f(T^k x) - xi| < delta}
  double chi_orbit_sum = 0.0;   // sum_k chi_delta(f(T^k x) - xi)
  double measure_delta = 0.0;   // mes S_f(xi, delta)
  double measure_2delta = 0.0;  // mes S_f(xi, 2 delta)
  double chi_average = 0.0;     // <chi_delta(f - xi)>
  double bound = 0.0;           // mes S_f(xi, 2 delta) + (1 + B_1) delta^{1/2}
};

LevelSetReport level_set_report(const Potential& f, const Dynamics& dyn, TorusPoint x, std::int64_t n, double xi,
                                double delta, const Quadrature& q = {});

struct ExceptionalScan {
  std::vector<double> xi;          // grid values with mes S_f(xi, delta) > delta^{1/2}
  std::vector<double> measures;    // the level-set measure at each grid point
  double exceptional_fraction = 0.0;
  double exceptional_measure = 0.0;  // fraction times |J_0| = 2 B_0
};

ExceptionalScan exceptional_xi_scan(const Potential& f, double delta, const std::vector<double>& xi_grid,
                                    const Quadrature& q = {});

/// Clamp floor for raw logarithms.
inline constexpr double kLogFloor = -690.77552789821368;  // log(1e-300)

struct LogAverage {
  double raw = 0.0;
  std::size_t clamped_nodes = 0;
  std::optional<double> regularized;  // set when delta was given
  /// |raw - regularized| when both are present.
  [[nodiscard]] double difference() const { return regularized ? std::abs(raw - *regularized) : 0.0; }
};

/// <log|f - xi|> (clamped at kLogFloor) and, if delta is given, <log rho_delta(f - xi)>.
LogAverage log_average(const Potential& f, double xi, std::optional<double> delta = std::nullopt,
                       const Quadrature& q = {});

/// log|v| clamped at kLogFloor.
double clamped_log(double v);

struct DeviationMeasure {
  Proportion proportion;
  double reference = 0.0;  // <log|f - xi|>
};

/// Monte-Carlo mes{x : |N^-1 sum_{k=1}^N log|f(T^k x) - xi| - <log|f - xi|>| > tol}
/// over phase_samples uniform phases; phase i uses stream (seed, i).
DeviationMeasure deviation_measure(const Potential& f, const Dynamics& dyn, std::int64_t n, double xi, double tol,
                                   std::size_t phase_samples, std::uint64_t seed,
                                   const WorkerPool& pool = serial_pool(), const Quadrature& q = {});

/// Per-phase deviations used by deviation_measure, exposed for sweeps over tol.
std::vector<double> orbit_log_deviations(const Potential& f, const Dynamics& dyn, std::int64_t n, double xi,
                                         double reference, std::size_t phase_samples, std::uint64_t seed,
                                         const WorkerPool& pool = serial_pool());

}  // namespace cocycle::ergodic
