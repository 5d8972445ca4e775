#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocycle/potential.hpp"
#include "cocycle/torus_dynamics.hpp"

namespace cocycle {

/// Raised when a computation hits an exactly singular window (E in the
/// spectrum, zero pivot, eta = 0).
class NumericalDegeneracy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H_[a,b](x) - E with H psi(n) = -psi(n+1) - psi(n-1) + lambda V(T^n x) psi(n),
/// Dirichlet conditions outside [a, b].
struct SpectralWindow {
  std::int64_t a = 1;
  std::int64_t b = 1;
  TorusPoint phase;
  Dynamics dyn = Dynamics::shift(0.0, 0.0);
  Potential potential = Potential::constant(0.0);
  double coupling = 1.0;
  double energy = 0.0;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(b - a + 1); }
  /// lambda V(T^n x) for n = a..b.
  [[nodiscard]] std::vector<double> onsite() const;
  /// onsite() minus E.
  [[nodiscard]] std::vector<double> shifted_diagonal() const;
  /// lambda B_0(V), the radius used for Gershgorin brackets and tolerances.
  [[nodiscard]] double scale() const { return 2.0 + std::abs(coupling) * potential.holder().sup_norm; }
};

/// sign * exp(log_abs); sign 0 carries log_abs = -inf.
struct SignedLogDet {
  int sign = 1;
  double log_abs = 0.0;

  [[nodiscard]] double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
  static SignedLogDet zero() { return {0, -std::numeric_limits<double>::infinity()}; }
};

SignedLogDet operator*(SignedLogDet x, SignedLogDet y);
SignedLogDet operator/(SignedLogDet x, SignedLogDet y);

/// 2x2 matrix stored as entries * 2^exponent with max |entry| in [1/2, 1).
class LogScaledMatrix {
 public:
  static LogScaledMatrix identity();
  /// Exact, possibly huge, matrix given as plain entries.
  static LogScaledMatrix from_entries(double m00, double m01, double m10, double m11);

  /// this <- [[d, -1], [1, 0]] * this.
  void left_multiply_transfer(double d);

  [[nodiscard]] double entry(int i, int j) const { return e_[static_cast<std::size_t>(2 * i + j)]; }
  [[nodiscard]] std::int64_t exponent() const { return exp_; }
  [[nodiscard]] double log_scale() const;
  /// Entry of the represented matrix (may overflow to inf for long products).
  [[nodiscard]] double value(int i, int j) const;
  [[nodiscard]] SignedLogDet log_entry(int i, int j) const;
  /// log of the largest singular value of the represented matrix.
  [[nodiscard]] double log_norm() const;
  /// Determinant of the represented matrix in sign/log form.
  [[nodiscard]] SignedLogDet log_determinant() const;

  friend LogScaledMatrix operator*(const LogScaledMatrix& x, const LogScaledMatrix& y);

 private:
  void normalize();

  std::array<double, 4> e_{1.0, 0.0, 0.0, 1.0};
  std::int64_t exp_ = 0;
};

/// f_[a,b] for the shifted diagonal d_n = V_n - E by the three-term recurrence.
SignedLogDet determinant(std::span<const double> shifted);
SignedLogDet dirichlet_determinant(const SpectralWindow& w);

/// out[k] = f of the first k entries, k = 0..N (out[0] = 1).
std::vector<SignedLogDet> prefix_determinants(std::span<const double> shifted);
/// out[k] = f of entries k..N-1, k = 0..N (out[N] = 1).
std::vector<SignedLogDet> suffix_determinants(std::span<const double> shifted);

/// prod_{m=b}^{a} [[V_m - E, -1], [1, 0]], newest factor on the left.
LogScaledMatrix monodromy(std::span<const double> shifted);
LogScaledMatrix monodromy(const SpectralWindow& w);

struct IdentityCheck {
  double max_discrepancy = 0.0;  // max |log|M_ij| - log|f_ij||
  bool signs_agree = true;
  [[nodiscard]] bool ok(double tol) const { return signs_agree && max_discrepancy <= tol; }
};

/// Compares M_[a,b] with [[f_[a,b], -f_[a+1,b]], [f_[a,b-1], -f_[a+1,b-1]]].
/// Requires b - a >= 2.
IdentityCheck monodromy_identity_check(const SpectralWindow& w);
IdentityCheck monodromy_identity_check(std::span<const double> shifted);

/// #{eigenvalues of the Jacobi matrix with diagonal `diag` that are < e}.
std::size_t sturm_count(std::span<const double> diag, double e);

struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;  // empty unless requested
  std::vector<double> residuals;                  // ||(H - E_j) psi_j||, with eigenvectors
  std::vector<bool> converged;
};

/// Default bisection tolerance 1e-12 (2 + lambda B_0).
double default_eigen_tolerance(const SpectralWindow& w);

/// All eigenvalues by bisection in the Gershgorin bracket of `diag`, each to
/// width <= tol (at most 60 halvings); tol <= 0 bisects to machine resolution.
std::vector<double> eigenvalues_sturm(std::span<const double> diag, double tol);
SpectralDecomposition eigenvalues_sturm(const SpectralWindow& w, double tol);

struct EigenvectorResult {
  std::vector<double> vector;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Inverse iteration for the eigenvalue near e_approx from a start vector drawn
/// from stream (seed, 0). Sign convention: first entry above 1e-12 max|x| is positive.
EigenvectorResult eigenvector_inverse_iteration(std::span<const double> diag, double e_approx, double target_residual,
                                                std::uint64_t seed = 0);
EigenvectorResult eigenvector_inverse_iteration(const SpectralWindow& w, double e_approx);

/// Eigenvalues and unit eigenvectors; vectors in clusters narrower than 1e-9
/// are re-orthogonalized.
SpectralDecomposition decompose(std::span<const double> diag, double tol, double target_residual);
SpectralDecomposition decompose(const SpectralWindow& w);

/// Residual ||(H - e) v|| for the Jacobi matrix with diagonal `diag`.
double residual_norm(std::span<const double> diag, double e, std::span<const double> v);

/// G(m, n) = f_[a,m-1] f_[n+1,b] / f_[a,b] for a window, indices absolute.
class GreenFunction {
 public:
  explicit GreenFunction(const SpectralWindow& w);
  GreenFunction(std::span<const double> shifted, std::int64_t a);

  /// Symmetric in (m, n). Throws NumericalDegeneracy if f_[a,b] = 0.
  [[nodiscard]] SignedLogDet entry(std::int64_t m, std::int64_t n) const;
  [[nodiscard]] const SignedLogDet& denominator() const { return prefix_.back(); }

 private:
  std::int64_t a_;
  std::int64_t b_;
  std::vector<SignedLogDet> prefix_;
  std::vector<SignedLogDet> suffix_;
};

SignedLogDet green_entry(const SpectralWindow& w, std::int64_t m, std::int64_t n);

struct GreenColumn {
  std::vector<double> values;  // u with (H - E) u = e_m, indexed from a
  double residual = 0.0;       // ||(H - E) u - e_m||
};

/// Direct solve by tridiagonal LU with partial pivoting. Throws
/// NumericalDegeneracy on an exactly zero pivot.
GreenColumn green_oracle(const SpectralWindow& w, std::int64_t m);
GreenColumn green_oracle(std::span<const double> shifted, std::size_t m_index);

struct WeylComparison {
  double lhs = 0.0;
  double eta = 0.0;
  double bound_ratio = 0.0;
  std::size_t blocks = 0;
  bool degenerate = false;  // eta == 0
};

/// Blocks [a, c_1], [c_1 + 1, c_2], ..., [c_{n-1} + 1, c_n] with c_n <= b; a
/// trailing remainder (c_n, b] is left out of the block product.
WeylComparison weyl_comparison_report(const SpectralWindow& w, const std::vector<std::int64_t>& cuts);

struct PerturbationCheck {
  double max_eigen_shift = 0.0;  // max_j |E_j - E_j'|
  double diag_sup = 0.0;         // max_n |lambda V(T^n x) - lambda V(T'^n x')|
  double tolerance = 0.0;        // eigensolver slack added to the comparison
  double holder_ratio = 0.0;     // shift / (N^2 lambda B_alpha (|dx| + |domega|)^alpha)
  [[nodiscard]] bool holds() const { return max_eigen_shift <= diag_sup + tolerance; }
};

PerturbationCheck eigenvalue_perturbation_check(const SpectralWindow& w, TorusPoint x2, const Dynamics& dyn2);

struct ThoulessCheck {
  double discrepancy = 0.0;  // |log|f_N| - sum_j log|E_j - E||
  double distance = 0.0;     // dist(E, spectrum)
  double bound = 0.0;        // N * tol / distance
};

/// Eigenvalues are bisected to machine resolution for this comparison.
ThoulessCheck thouless_check(const SpectralWindow& w);

}  // namespace cocycle
