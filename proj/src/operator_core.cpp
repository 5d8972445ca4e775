#include "cocycle/operator_core.hpp"

#include <algorithm>
#include <numbers>

#include "cocycle/rng.hpp"

// Mutation fixtures for the identity suite: 1 flips the sign of f_{n-2} in the
// determinant recurrence, 2 drops every rescale, 3 shifts the Cramer numerator
// interval by one site.
#ifndef COCYCLE_FAULT
#define COCYCLE_FAULT 0
#endif

namespace cocycle {

namespace {

constexpr double kLn2 = std::numbers::ln2;

int sign_of(double v) {
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

SignedLogDet from_scaled(double v, std::int64_t exponent) {
  const int s = sign_of(v);
  if (s == 0) {
    if (std::isnan(v)) return {0, v};
    return SignedLogDet::zero();
  }
  return {s, std::log(std::abs(v)) + static_cast<double>(exponent) * kLn2};
}

// Running pair (f_n, f_{n-1}) scaled by 2^exponent.
struct DeterminantState {
  double cur = 1.0;
  double prev = 0.0;
  std::int64_t exponent = 0;

  void step(double d) {
#if COCYCLE_FAULT == 1
    const double next = d * cur + prev;
#else
    const double next = d * cur - prev;
#endif
    prev = cur;
    cur = next;
#if COCYCLE_FAULT != 2
    const double big = std::max(std::abs(cur), std::abs(prev));
    if (big > 0.0 && std::isfinite(big)) {
      int e = 0;
      std::frexp(big, &e);
      cur = std::ldexp(cur, -e);
      prev = std::ldexp(prev, -e);
      exponent += e;
    }
#endif
  }

  [[nodiscard]] SignedLogDet value() const { return from_scaled(cur, exponent); }
};

// LU factorization with partial pivoting of the Jacobi matrix with diagonal
// `diag` - shift and off-diagonals -1.
class TridiagonalLU {
 public:
  TridiagonalLU(std::span<const double> diag, double shift, bool replace_zero_pivot) {
    const std::size_t n = diag.size();
    d_.resize(n);
    for (std::size_t i = 0; i < n; ++i) d_[i] = diag[i] - shift;
    dl_.assign(n > 0 ? n - 1 : 0, -1.0);
    du_.assign(n > 0 ? n - 1 : 0, -1.0);
    du2_.assign(n > 1 ? n - 2 : 0, 0.0);
    swapped_.assign(n > 0 ? n - 1 : 0, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(dl_[i])) {
        const double fact = dl_[i] / d_[i];
        dl_[i] = fact;
        d_[i + 1] -= fact * du_[i];
      } else {
        const double fact = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = fact;
        const double temp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = temp - fact * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -fact * du_[i + 1];
        }
        swapped_[i] = 1;
      }
    }
    for (double& p : d_) {
      if (p == 0.0) {
        if (!replace_zero_pivot) throw NumericalDegeneracy("zero pivot: energy lies in the window spectrum");
        p = std::numeric_limits<double>::epsilon();
      }
    }
  }

  void solve(std::vector<double>& b) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped_[i]) {
        b[i + 1] -= dl_[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl_[i] * b[i];
      }
    }
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    for (std::size_t k = n; k-- > 2;) {
      const std::size_t i = k - 2;
      b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
    }
  }

 private:
  std::vector<double> d_, dl_, du_, du2_;
  std::vector<char> swapped_;
};

double norm2(std::span<const double> v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x / scale) * (x / scale);
  return scale * std::sqrt(s);
}

void apply_sign_convention(std::vector<double>& v) {
  double big = 0.0;
  for (double x : v) big = std::max(big, std::abs(x));
  for (double x : v) {
    if (std::abs(x) > 1e-12 * big) {
      if (x < 0.0) {
        for (double& y : v) y = -y;
      }
      return;
    }
  }
}

EigenvectorResult inverse_iteration(std::span<const double> diag, double e, double target, std::uint64_t seed,
                                    std::uint64_t stream, std::span<const std::vector<double>> against) {
  constexpr int kMaxIterations = 50;
  const std::size_t n = diag.size();
  const TridiagonalLU lu(diag, e, true);
  auto rng = stream_for(seed, stream);
  std::vector<double> x(n);
  for (double& v : x) v = uniform(rng, -1.0, 1.0);
  EigenvectorResult out;
  int extra = 0;  // dstein-style polishing steps after the target is met
  for (int it = 1; it <= kMaxIterations; ++it) {
    lu.solve(x);
    for (const auto& q : against) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += q[i] * x[i];
      for (std::size_t i = 0; i < n; ++i) x[i] -= dot * q[i];
    }
    const double nx = norm2(x);
    if (!(nx > 0.0) || !std::isfinite(nx)) {
      for (double& v : x) v = uniform(rng, -1.0, 1.0);
      continue;
    }
    for (double& v : x) v /= nx;
    out.iterations = it;
    out.residual = residual_norm(diag, e, x);
    if (out.residual <= target) {
      out.converged = true;
      if (++extra > 2) break;
    }
  }
  apply_sign_convention(x);
  out.vector = std::move(x);
  return out;
}

std::pair<double, double> gershgorin(std::span<const double> diag) {
  const auto [lo, hi] = std::minmax_element(diag.begin(), diag.end());
  const double pad = 2.0 + 1e-12 * (1.0 + std::max(std::abs(*lo), std::abs(*hi)));
  return {*lo - pad, *hi + pad};
}

}  // namespace

std::vector<double> SpectralWindow::onsite() const {
  if (b < a) throw std::invalid_argument("spectral window: need a <= b");
  std::vector<double> v;
  v.reserve(size());
  OrbitStepper stepper(dyn, iterate(dyn, phase, a));
  for (std::int64_t n = a; n <= b; ++n) {
    v.push_back(coupling * potential(stepper.current()));
    stepper.advance();
  }
  return v;
}

std::vector<double> SpectralWindow::shifted_diagonal() const {
  auto v = onsite();
  for (double& x : v) x -= energy;
  return v;
}

SignedLogDet operator*(SignedLogDet x, SignedLogDet y) {
  if (x.sign == 0 || y.sign == 0) return SignedLogDet::zero();
  return {x.sign * y.sign, x.log_abs + y.log_abs};
}

SignedLogDet operator/(SignedLogDet x, SignedLogDet y) {
  if (y.sign == 0) throw NumericalDegeneracy("division by a vanishing determinant");
  if (x.sign == 0) return SignedLogDet::zero();
  return {x.sign * y.sign, x.log_abs - y.log_abs};
}

LogScaledMatrix LogScaledMatrix::identity() {
  LogScaledMatrix m;
  m.normalize();
  return m;
}

LogScaledMatrix LogScaledMatrix::from_entries(double m00, double m01, double m10, double m11) {
  LogScaledMatrix m;
  m.e_ = {m00, m01, m10, m11};
  m.normalize();
  return m;
}

void LogScaledMatrix::normalize() {
#if COCYCLE_FAULT != 2
  double big = 0.0;
  for (double v : e_) big = std::max(big, std::abs(v));
  if (big > 0.0 && std::isfinite(big)) {
    int e = 0;
    std::frexp(big, &e);
    for (double& v : e_) v = std::ldexp(v, -e);
    exp_ += e;
  }
#endif
}

void LogScaledMatrix::left_multiply_transfer(double d) {
  const double r0 = d * e_[0] - e_[2];
  const double r1 = d * e_[1] - e_[3];
  e_[2] = e_[0];
  e_[3] = e_[1];
  e_[0] = r0;
  e_[1] = r1;
  normalize();
}

double LogScaledMatrix::log_scale() const { return static_cast<double>(exp_) * kLn2; }

double LogScaledMatrix::value(int i, int j) const {
  return std::ldexp(entry(i, j), static_cast<int>(std::clamp<std::int64_t>(exp_, -100000, 100000)));
}

SignedLogDet LogScaledMatrix::log_entry(int i, int j) const { return from_scaled(entry(i, j), exp_); }

double LogScaledMatrix::log_norm() const {
  const double a = e_[0], b = e_[1], c = e_[2], d = e_[3];
  const double sigma = 0.5 * (std::hypot(a + d, c - b) + std::hypot(a - d, b + c));
  double big = 0.0;
  for (double v : e_) big = std::max(big, std::abs(v));
  // sigma_max >= max |entry| holds exactly; the max guards against rounding.
  return std::log(std::max(sigma, big)) + log_scale();
}

SignedLogDet LogScaledMatrix::log_determinant() const {
  // Kahan's fma evaluation of ad - bc.
  const double w = e_[1] * e_[2];
  const double err = std::fma(-e_[1], e_[2], w);
  const double det = std::fma(e_[0], e_[3], -w) + err;
  return from_scaled(det, 2 * exp_);
}

LogScaledMatrix operator*(const LogScaledMatrix& x, const LogScaledMatrix& y) {
  LogScaledMatrix r;
  r.e_ = {x.e_[0] * y.e_[0] + x.e_[1] * y.e_[2], x.e_[0] * y.e_[1] + x.e_[1] * y.e_[3],
          x.e_[2] * y.e_[0] + x.e_[3] * y.e_[2], x.e_[2] * y.e_[1] + x.e_[3] * y.e_[3]};
  r.exp_ = x.exp_ + y.exp_;
  r.normalize();
  return r;
}

SignedLogDet determinant(std::span<const double> shifted) {
  DeterminantState s;
  for (double d : shifted) s.step(d);
  return s.value();
}

SignedLogDet dirichlet_determinant(const SpectralWindow& w) { return determinant(w.shifted_diagonal()); }

std::vector<SignedLogDet> prefix_determinants(std::span<const double> shifted) {
  std::vector<SignedLogDet> out;
  out.reserve(shifted.size() + 1);
  DeterminantState s;
  out.push_back(s.value());
  for (double d : shifted) {
    s.step(d);
    out.push_back(s.value());
  }
  return out;
}

std::vector<SignedLogDet> suffix_determinants(std::span<const double> shifted) {
  const std::size_t n = shifted.size();
  std::vector<SignedLogDet> out(n + 1);
  DeterminantState s;
  out[n] = s.value();
  for (std::size_t k = n; k-- > 0;) {
    s.step(shifted[k]);
    out[k] = s.value();
  }
  return out;
}

LogScaledMatrix monodromy(std::span<const double> shifted) {
  LogScaledMatrix m = LogScaledMatrix::identity();
  for (double d : shifted) m.left_multiply_transfer(d);
  return m;
}

LogScaledMatrix monodromy(const SpectralWindow& w) { return monodromy(w.shifted_diagonal()); }

IdentityCheck monodromy_identity_check(std::span<const double> shifted) {
  const std::size_t n = shifted.size();
  if (n < 3) throw std::invalid_argument("monodromy_identity_check: need b - a >= 2");
  const LogScaledMatrix m = monodromy(shifted);
  auto negate = [](SignedLogDet v) { return SignedLogDet{-v.sign, v.log_abs}; };
  const std::array<SignedLogDet, 4> expected{
      determinant(shifted),
      negate(determinant(shifted.subspan(1))),
      determinant(shifted.first(n - 1)),
      negate(determinant(shifted.subspan(1, n - 2))),
  };
  IdentityCheck out;
  for (int k = 0; k < 4; ++k) {
    const SignedLogDet got = m.log_entry(k / 2, k % 2);
    const SignedLogDet& want = expected[static_cast<std::size_t>(k)];
    if (got.sign != want.sign) out.signs_agree = false;
    if (got.sign == 0 && want.sign == 0 && !std::isnan(got.log_abs) && !std::isnan(want.log_abs)) continue;
    const double d = std::abs(got.log_abs - want.log_abs);
    if (std::isnan(d) || d > out.max_discrepancy) out.max_discrepancy = d;
    if (std::isnan(out.max_discrepancy)) break;
  }
  return out;
}

IdentityCheck monodromy_identity_check(const SpectralWindow& w) {
  return monodromy_identity_check(w.shifted_diagonal());
}

std::size_t sturm_count(std::span<const double> diag, double e) {
  constexpr double pivmin = std::numeric_limits<double>::min();
  std::size_t count = 0;
  double q = 1.0;
  bool first = true;
  for (double d : diag) {
    q = first ? d - e : (d - e) - 1.0 / q;
    first = false;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

double default_eigen_tolerance(const SpectralWindow& w) { return 1e-12 * w.scale(); }

std::vector<double> eigenvalues_sturm(std::span<const double> diag, double tol) {
  constexpr int kMaxHalvings = 60;
  const std::size_t n = diag.size();
  std::vector<double> out;
  out.reserve(n);
  if (n == 0) return out;
  const auto [glo, ghi] = gershgorin(diag);
  double floor_lo = glo;
  for (std::size_t j = 0; j < n; ++j) {
    double lo = floor_lo;
    double hi = ghi;
    for (int it = 0; it < kMaxHalvings; ++it) {
      if (tol > 0.0 && hi - lo <= tol) break;
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (sturm_count(diag, mid) > j) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    // The j-th eigenvalue is >= lo, so later ones are as well.
    floor_lo = lo;
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

SpectralDecomposition eigenvalues_sturm(const SpectralWindow& w, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("eigenvalues_sturm: tol must be positive");
  SpectralDecomposition out;
  out.eigenvalues = eigenvalues_sturm(w.onsite(), tol);
  return out;
}

double residual_norm(std::span<const double> diag, double e, std::span<const double> v) {
  const std::size_t n = diag.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = (diag[i] - e) * v[i];
    if (i > 0) s -= v[i - 1];
    if (i + 1 < n) s -= v[i + 1];
    r[i] = s;
  }
  return norm2(r);
}

EigenvectorResult eigenvector_inverse_iteration(std::span<const double> diag, double e_approx, double target_residual,
                                                std::uint64_t seed) {
  return inverse_iteration(diag, e_approx, target_residual, seed, 0, {});
}

EigenvectorResult eigenvector_inverse_iteration(const SpectralWindow& w, double e_approx) {
  return eigenvector_inverse_iteration(w.onsite(), e_approx, 1e-8 * w.scale());
}

SpectralDecomposition decompose(std::span<const double> diag, double tol, double target_residual) {
  constexpr double kClusterGap = 1e-9;
  SpectralDecomposition out;
  out.eigenvalues = eigenvalues_sturm(diag, tol);
  const std::size_t n = out.eigenvalues.size();
  out.eigenvectors.reserve(n);
  std::size_t cluster_start = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0 && out.eigenvalues[j] - out.eigenvalues[j - 1] >= kClusterGap) cluster_start = j;
    const std::span<const std::vector<double>> against(out.eigenvectors.data() + cluster_start, j - cluster_start);
    auto r = inverse_iteration(diag, out.eigenvalues[j], target_residual, 0, j, against);
    out.residuals.push_back(r.residual);
    out.converged.push_back(r.converged);
    out.eigenvectors.push_back(std::move(r.vector));
  }
  return out;
}

SpectralDecomposition decompose(const SpectralWindow& w) {
  return decompose(w.onsite(), default_eigen_tolerance(w), 1e-8 * w.scale());
}

GreenFunction::GreenFunction(std::span<const double> shifted, std::int64_t a)
    : a_(a),
      b_(a + static_cast<std::int64_t>(shifted.size()) - 1),
      prefix_(prefix_determinants(shifted)),
      suffix_(suffix_determinants(shifted)) {}

GreenFunction::GreenFunction(const SpectralWindow& w) : GreenFunction(w.shifted_diagonal(), w.a) {}

SignedLogDet GreenFunction::entry(std::int64_t m, std::int64_t n) const {
  if (m > n) std::swap(m, n);
  if (m < a_ || n > b_) throw std::out_of_range("green entry outside the window");
  if (denominator().sign == 0) throw NumericalDegeneracy("f_[a,b] vanishes: energy lies in the window spectrum");
#if COCYCLE_FAULT == 3
  const auto left = prefix_[static_cast<std::size_t>(std::min(m - a_ + 1, b_ - a_ + 1))];
#else
  const auto left = prefix_[static_cast<std::size_t>(m - a_)];
#endif
  const auto right = suffix_[static_cast<std::size_t>(n + 1 - a_)];
  return (left * right) / denominator();
}

SignedLogDet green_entry(const SpectralWindow& w, std::int64_t m, std::int64_t n) {
  return GreenFunction(w).entry(m, n);
}

GreenColumn green_oracle(std::span<const double> shifted, std::size_t m_index) {
  const std::size_t n = shifted.size();
  if (m_index >= n) throw std::out_of_range("green_oracle: index outside the window");
  const TridiagonalLU lu(shifted, 0.0, false);
  GreenColumn out;
  out.values.assign(n, 0.0);
  out.values[m_index] = 1.0;
  lu.solve(out.values);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = shifted[i] * out.values[i];
    if (i > 0) s -= out.values[i - 1];
    if (i + 1 < n) s -= out.values[i + 1];
    r[i] = s - (i == m_index ? 1.0 : 0.0);
  }
  out.residual = norm2(r);
  return out;
}

GreenColumn green_oracle(const SpectralWindow& w, std::int64_t m) {
  if (m < w.a || m > w.b) throw std::out_of_range("green_oracle: index outside the window");
  return green_oracle(w.shifted_diagonal(), static_cast<std::size_t>(m - w.a));
}

WeylComparison weyl_comparison_report(const SpectralWindow& w, const std::vector<std::int64_t>& cuts) {
  if (cuts.empty()) throw std::invalid_argument("weyl_comparison_report: need at least one block");
  const auto diag = w.onsite();
  const auto shifted = w.shifted_diagonal();
  const double tol = default_eigen_tolerance(w);
  WeylComparison out;
  out.blocks = cuts.size();
  double eta = std::numeric_limits<double>::infinity();
  auto track = [&](std::span<const double> block) {
    for (double ev : eigenvalues_sturm(block, tol)) eta = std::min(eta, std::abs(ev - w.energy));
  };
  track(diag);
  const SignedLogDet full = determinant(shifted);
  double block_sum = 0.0;
  bool any_zero = full.sign == 0;
  std::int64_t start = w.a;
  for (std::int64_t c : cuts) {
    if (c < start || c > w.b) throw std::invalid_argument("weyl_comparison_report: cuts must increase inside [a, b]");
    const auto off = static_cast<std::size_t>(start - w.a);
    const auto len = static_cast<std::size_t>(c - start + 1);
    const auto part = determinant(std::span<const double>(shifted).subspan(off, len));
    any_zero = any_zero || part.sign == 0;
    block_sum += part.log_abs;
    track(std::span<const double>(diag).subspan(off, len));
    start = c + 1;
  }
  out.eta = eta;
  out.degenerate = any_zero || eta == 0.0;
  out.lhs = out.degenerate ? std::numeric_limits<double>::infinity() : std::abs(full.log_abs - block_sum);
  const auto n_len = static_cast<double>(w.size());
  const auto covered = static_cast<double>(cuts.back() - w.a + 1);
  const double lb0 = std::abs(w.coupling) * w.potential.holder().sup_norm;
  const double denom = (static_cast<double>(cuts.size()) + n_len - covered) * std::log((lb0 + 1.0) / eta);
  out.bound_ratio = out.lhs / denom;
  return out;
}

PerturbationCheck eigenvalue_perturbation_check(const SpectralWindow& w, TorusPoint x2, const Dynamics& dyn2) {
  SpectralWindow w2 = w;
  w2.phase = x2;
  w2.dyn = dyn2;
  const auto d1 = w.onsite();
  const auto d2 = w2.onsite();
  const double tol = default_eigen_tolerance(w);
  const auto e1 = eigenvalues_sturm(d1, tol);
  const auto e2 = eigenvalues_sturm(d2, tol);
  PerturbationCheck out;
  out.tolerance = 2.0 * tol;
  for (std::size_t j = 0; j < e1.size(); ++j) {
    out.max_eigen_shift = std::max(out.max_eigen_shift, std::abs(e1[j] - e2[j]));
    out.diag_sup = std::max(out.diag_sup, std::abs(d1[j] - d2[j]));
  }
  auto circle = [](double t) { return std::abs(t - std::round(t)); };
  const double dx = torus_distance(w.phase, x2);
  const double dw = std::hypot(circle(w.dyn.omega1() - dyn2.omega1()), circle(w.dyn.omega2() - dyn2.omega2()));
  const auto n = static_cast<double>(w.size());
  const HolderData& h = w.potential.holder();
  const double denom = n * n * std::abs(w.coupling) * h.holder_constant * std::pow(dx + dw, h.alpha);
  out.holder_ratio = (denom > 0.0 && std::isfinite(denom)) ? out.max_eigen_shift / denom : 0.0;
  return out;
}

ThoulessCheck thouless_check(const SpectralWindow& w) {
  const auto diag = w.onsite();
  const auto eig = eigenvalues_sturm(diag, 0.0);
  const SignedLogDet f = dirichlet_determinant(w);
  ThoulessCheck out;
  out.distance = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double ev : eig) {
    const double d = std::abs(ev - w.energy);
    out.distance = std::min(out.distance, d);
    sum += std::log(d);
  }
  if (out.distance == 0.0 || f.sign == 0) throw NumericalDegeneracy("thouless_check: energy lies in the spectrum");
  out.discrepancy = std::abs(f.log_abs - sum);
  out.bound = static_cast<double>(eig.size()) * 4.0 * std::numeric_limits<double>::epsilon() * w.scale() / out.distance;
  return out;
}

}  // namespace cocycle
