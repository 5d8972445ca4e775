#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cocycle/ergodic_tools.hpp"
#include "cocycle/operator_core.hpp"
#include "cocycle/parallel.hpp"
#include "cocycle/potential.hpp"
#include "cocycle/stats.hpp"
#include "cocycle/torus_dynamics.hpp"

namespace cocycle::experiments {

/// Potential, dynamics and coupling shared by every scan. Sample i of a scan
/// seeded with s uses the phase drawn from stream (s, i).
struct Model {
  Potential potential = Potential::constant(0.0);
  Dynamics dyn = Dynamics::shift(0.0, 0.0);
  double coupling = 1.0;

  [[nodiscard]] SpectralWindow window(TorusPoint x, std::int64_t a, std::int64_t b, double energy) const;
  /// lambda V(T^n x), n = a .. a + count - 1.
  [[nodiscard]] std::vector<double> onsite(TorusPoint x, std::int64_t a, std::size_t count) const;
};

/// Uniform phase for sample `index` of a scan seeded with `seed`.
TorusPoint sample_phase(std::uint64_t seed, std::uint64_t index);

struct ScaleMean {
  std::int64_t ell = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct LyapunovEstimate {
  double L_hat = 0.0;
  double stderr_ = 0.0;
  std::int64_t N = 0;
  std::size_t samples = 0;
  std::vector<ScaleMean> per_scale;  // ell = N/8, N/4, N/2, N: mean of ell^-1 log||M_ell||
  double raw_mean = 0.0;             // mean of N^-1 log||M_N|| (per_scale.back())
};

/// L_hat = max(0, mean over phases of 2 N^-1 (log||M_N|| - log||M_{N/2}||)).
/// The two-scale difference cancels the O(1/N) boundary term of the plain
/// average; stderr is that of the unclamped per-phase differences.
LyapunovEstimate lyapunov_estimate(const Model& model, double energy, std::int64_t n, std::size_t samples,
                                   std::uint64_t seed, const WorkerPool& pool = serial_pool());

struct ScaleRow {
  std::int64_t ell = 0;
  double mean = 0.0;        // ell^-1 <log|f_ell|>
  double stderr_ = 0.0;
  double gap = 0.0;         // |mean - previous mean|, 0 for the first scale
  double envelope = 0.0;    // max of gaps at this and later scales
  double reference = 0.0;   // ell^-1/2
};

struct ScaleConvergence {
  std::vector<ScaleRow> rows;
  LineFit gap_fit;  // log gap against log ell over rows with a positive gap
};

/// Paired phases: every scale uses the same sampled phases, window [1, ell].
ScaleConvergence scale_convergence_scan(const Model& model, double energy, const std::vector<std::int64_t>& scales,
                                        std::size_t samples, std::uint64_t seed,
                                        const WorkerPool& pool = serial_pool());

struct DeviationReport {
  std::int64_t N = 0;
  double E = 0.0;
  double tol = 0.0;
  double fraction = 0.0;
  double ci95 = 0.0;
  Proportion proportion;
  double mean_log_det = 0.0;         // over the same sample
  double independent_mean = 0.0;     // over samples [samples, 2 samples)
};

/// Fraction of phases with |log|f_N| - mean| > tol, tol = N^(1 - kappa) unless
/// given. Exactly singular determinants count as deviations.
DeviationReport determinant_ldt(const Model& model, double energy, std::int64_t n, double kappa, std::size_t samples,
                                std::uint64_t seed, const WorkerPool& pool = serial_pool(),
                                std::optional<double> tol = std::nullopt);

struct UniformUpper {
  double sup_rate = 0.0;    // sup over phases and N' in [ceil sqrt N, N] of N'^-1 log||M_N'||
  double mean_rate = 0.0;   // N^-1 mean log||M_N||
  double excess = 0.0;      // sup_rate - mean_rate
  double allowance = 0.0;   // N^-kappa
  std::int64_t argmax_n = 0;
  TorusPoint argmax_phase;
};

UniformUpper uniform_upper_check(const Model& model, double energy, std::int64_t n, std::size_t sample_sup,
                                 std::uint64_t seed, double kappa = 0.1, const WorkerPool& pool = serial_pool());

enum class ResonanceFunction { Raw, Eigenvalue };

struct ResonanceParams {
  std::int64_t N = 200;
  std::vector<std::int64_t> n_bar;
  std::vector<double> xi;
  double kappa = 0.2;
  double beta = 0.5;
  ResonanceFunction function = ResonanceFunction::Raw;
  std::int64_t ell = 0;     // eigenvalue function size; 0 selects ceil(N^0.2)
  std::size_t level = 0;    // eigenvalue index j (0-based, clamped to ell - 1)
  ergodic::Quadrature quadrature{};
};

struct ResonanceRow {
  std::int64_t n_bar = 0;
  double xi = 0.0;
  double deviation = 0.0;
  bool flagged = false;
};

struct ResonanceScan {
  std::vector<ResonanceRow> rows;          // n_bar major, xi minor
  std::vector<double> space_average;       // <log|f - xi|> per xi
  double threshold = 0.0;                  // N^-kappa
  double flagged_fraction = 0.0;
  [[nodiscard]] double flagged_fraction_at(double xi) const;
};

/// f is the raw potential V or x -> E_j of H_[1,ell](x) at the model's coupling.
/// Each n_bar must satisfy N^2 < n_bar <= exp(N^beta).
ResonanceScan resonance_scan(const Model& model, TorusPoint x0, const ResonanceParams& params,
                             const WorkerPool& pool = serial_pool());

struct GreenDecayRow {
  double E = 0.0;
  double L0 = 0.0;
  bool skipped = false;     // E within 1e-9 of the window spectrum
  double max_excess = 0.0;  // max_{|m-n| > N/2} log|G(m,n)| + L0 |m-n| / 2
  bool violates = false;
};

struct GreenDecayParams {
  std::optional<double> L0;           // fixed rate; otherwise half of L_hat(E)
  std::int64_t lyapunov_n = 200;
  std::size_t lyapunov_samples = 16;
  std::uint64_t seed = 1;
};

struct GreenDecayScan {
  std::vector<GreenDecayRow> rows;
  std::size_t skipped = 0;
  double violating_fraction = 0.0;  // among rows that were not skipped
};

/// Window [1, N] at phase T^n_bar x0.
GreenDecayScan green_decay_scan(const Model& model, TorusPoint x0, std::int64_t n, std::int64_t n_bar,
                                const std::vector<double>& energies, const GreenDecayParams& params = {},
                                const WorkerPool& pool = serial_pool());

struct DecayProfile {
  double E = 0.0;
  std::int64_t center = 0;       // rounded center of mass of |psi|^2
  std::int64_t half_width = 0;   // smallest h with 99% of the mass in |n - center| <= h
  std::vector<std::pair<std::int64_t, double>> mass_fraction;  // full width w -> mass in |n - center| <= w/2
  double fitted_rate = 0.0;
  double fit_r2 = 0.0;
  double L_hat = 0.0;
  double residual = 0.0;
  bool edge_excluded = false;
  bool localized = false;  // fitted_rate >= rho L_hat / 2 and L_hat >= L_min
};

struct LocalizationParams {
  double rho = 0.5;
  double L_min = 0.01;
  std::int64_t lyapunov_n = 200;
  std::size_t lyapunov_samples = 16;
  std::uint64_t seed = 1;
  double tail_floor = 1e-12;  // tail sites with |psi| below tail_floor max|psi| are left out of the fit
  std::vector<std::int64_t> widths;  // empty selects 2, 4, 8, ..., up to the box
};

struct LocalizationReport {
  std::int64_t n_box = 0;
  std::int64_t collar = 0;  // ceil(N_box^(3/4))
  std::vector<DecayProfile> profiles;
  std::size_t counted = 0;  // eigenpairs outside the collar
  double localized_fraction = 0.0;
};

/// Eigenpairs of H_[-N_box, N_box](x0) with tail fits of log|psi| against |n - center|.
LocalizationReport localization_profile(const Model& model, TorusPoint x0, std::int64_t n_box,
                                        const LocalizationParams& params = {}, const WorkerPool& pool = serial_pool());

/// Profile statistics of one unit vector indexed from `first`.
DecayProfile decay_profile(std::span<const double> psi, std::int64_t first, double tail_floor,
                           const std::vector<std::int64_t>& widths);

struct DisorderRow {
  double E = 0.0;
  double mean_rate = 0.0;  // N^-1 <log|f_N|>
  double stderr_ = 0.0;
  bool pass = false;       // mean_rate > log(lambda) / 2
  double diag_gap_mean = 0.0;
  double diag_gap_max = 0.0;
};

struct DisorderReport {
  std::vector<DisorderRow> rows;
  double threshold = 0.0;        // log(lambda) / 2
  double failing_fraction = 0.0;
  double ceiling = 0.0;          // lambda^-1/8, reported only
};

/// Same phase sample for every energy. Requires lambda >= lambda0.
DisorderReport large_disorder_check(const Model& model, std::int64_t n, const std::vector<double>& energies,
                                    std::size_t samples, std::uint64_t seed, double lambda0 = 20.0,
                                    const WorkerPool& pool = serial_pool());

/// |log|f_N(x)| - log|det D_N(x)||, D_N the diagonal part of H_[1,N] - E.
double diag_gap(const Model& model, TorusPoint x, std::int64_t n, double energy);

/// lo, lo + h, ..., hi with `count` points (count >= 2), or {lo} for count 1.
std::vector<double> linear_grid(double lo, double hi, std::size_t count);

}  // namespace cocycle::experiments
