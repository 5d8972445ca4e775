#include "cocycle/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

#include "cocycle/extended_precision.hpp"

namespace cocycle::diophantine {

namespace mp = boost::multiprecision;

namespace {

constexpr int kShadowBits = 200;
constexpr std::int64_t kMaxDenominator = std::int64_t{1} << 53;

double lattice_norm(const Frequency& omega, std::int64_t k1, std::int64_t k2) {
  auto t = xp::frac_mul(k1, omega.w[0]);
  if (omega.dim == 2) t = xp::frac(xp::add(t, xp::frac_mul(k2, omega.w[1])));
  return torus_norm(t.hi + t.lo);
}

// Visits every k != 0 with |k1|, |k2| <= n up to the symmetry k -> -k, which
// leaves ||k . omega|| unchanged.
template <class Visit>
void for_each_lattice_point(int dim, std::int64_t n, Visit&& visit) {
  if (dim == 1) {
    for (std::int64_t k = 1; k <= n; ++k) visit(k, std::int64_t{0});
    return;
  }
  // k1 ascending, then k2 = 0, 1, -1, 2, -2, ...
  for (std::int64_t k1 = 0; k1 <= n; ++k1) {
    if (k1 > 0) visit(k1, std::int64_t{0});
    for (std::int64_t t = 1; t <= n; ++t) {
      visit(k1, t);
      if (k1 > 0) visit(k1, -t);
    }
  }
}

ContinuedFraction expand(mp::cpp_int numerator, double omega, int max_depth) {
  if (max_depth < 1) throw std::invalid_argument("continued_fraction: max_depth must be >= 1");
  ContinuedFraction cf;
  cf.omega = omega;
  mp::cpp_int n = std::move(numerator);
  mp::cpp_int d = mp::cpp_int(1) << kShadowBits;
  std::int64_t p_prev = 1, p_cur = 0;  // p_{-1}, p_0
  std::int64_t q_prev = 0, q_cur = 1;  // q_{-1}, q_0
  while (cf.depth() < max_depth) {
    if (n == 0) {
      cf.rational = true;
      break;
    }
    const mp::cpp_int a = d / n;
    const mp::cpp_int q_next = a * q_cur + q_prev;
    if (q_next > kMaxDenominator) break;
    const mp::cpp_int p_next = a * p_cur + p_prev;
    const auto a64 = static_cast<std::int64_t>(a);
    cf.partial_quotients.push_back(a64);
    p_prev = std::exchange(p_cur, static_cast<std::int64_t>(p_next));
    q_prev = std::exchange(q_cur, static_cast<std::int64_t>(q_next));
    cf.convergents.push_back({p_cur, q_cur});
    mp::cpp_int r = d % n;
    d = std::move(n);
    n = std::move(r);
  }
  if (!cf.rational && n == 0) cf.rational = true;
  return cf;
}

}  // namespace

double torus_norm(double t) {
  const double r = std::abs(t - std::round(t));
  return std::min(r, 0.5);
}

HighPrecision named_constant(std::string_view name) {
  if (name == "golden") return (mp::sqrt(HighPrecision(5)) - 1) / 2;
  if (name == "golden2") {
    const HighPrecision g = (mp::sqrt(HighPrecision(5)) - 1) / 2;
    return g * g;
  }
  if (name == "silver") return mp::sqrt(HighPrecision(2)) - 1;
  if (name == "pi") return boost::math::constants::pi<HighPrecision>() - 3;
  throw std::invalid_argument("unknown named frequency '" + std::string(name) + "'");
}

std::vector<std::string> named_constants() { return {"golden", "golden2", "pi", "silver"}; }

Frequency golden_pair() {
  return Frequency::two(static_cast<double>(named_constant("golden")),
                        static_cast<double>(named_constant("silver")));
}

std::int64_t ContinuedFraction::a(int s) const {
  if (s < 1 || s > depth()) throw std::out_of_range("continued fraction index out of range");
  return partial_quotients[static_cast<std::size_t>(s - 1)];
}

std::int64_t ContinuedFraction::p(int s) const {
  if (s == -1) return 1;
  if (s == 0) return 0;
  if (s < -1 || s > depth()) throw std::out_of_range("continued fraction index out of range");
  return convergents[static_cast<std::size_t>(s - 1)].p;
}

std::int64_t ContinuedFraction::q(int s) const {
  if (s == -1) return 0;
  if (s == 0) return 1;
  if (s < -1 || s > depth()) throw std::out_of_range("continued fraction index out of range");
  return convergents[static_cast<std::size_t>(s - 1)].q;
}

ContinuedFraction continued_fraction(double omega, int max_depth) {
  if (!(omega > 0.0 && omega < 1.0)) throw std::invalid_argument("continued_fraction: omega must lie in (0, 1)");
  return continued_fraction(HighPrecision(omega), max_depth);
}

ContinuedFraction continued_fraction(const HighPrecision& omega, int max_depth) {
  if (!(omega > 0 && omega < 1)) throw std::invalid_argument("continued_fraction: omega must lie in (0, 1)");
  const HighPrecision scaled = mp::ldexp(omega, kShadowBits);
  const mp::cpp_int numerator = mp::cpp_int(mp::round(scaled));
  return expand(numerator, static_cast<double>(omega), max_depth);
}

double komega_lower_bound(const ContinuedFraction& cf, std::int64_t m) {
  if (m < 1) throw std::out_of_range("komega_lower_bound: m must be >= 1");
  for (int s = 1; s < cf.depth(); ++s) {
    if (m < cf.q(s)) return static_cast<double>(cf.a(s + 1)) / static_cast<double>(cf.q(s + 1));
  }
  throw std::out_of_range("komega_lower_bound: m beyond the stored convergents");
}

std::optional<int> bracketing_scale(const ContinuedFraction& cf, std::int64_t n) {
  for (int s = 1; s <= cf.depth(); ++s) {
    if (cf.q(s - 1) <= n && n < cf.q(s)) return s;
  }
  return std::nullopt;
}

LatticeMinimum min_komega(const Frequency& omega, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("min_komega: N must be >= 1");
  LatticeMinimum best{{0, 0}, 1.0};
  for_each_lattice_point(omega.dim, n, [&](std::int64_t k1, std::int64_t k2) {
    const double v = lattice_norm(omega, k1, k2);
    if (v < best.value) best = {{k1, k2}, v};
  });
  return best;
}

namespace {

// Scans |k| <= n and keeps the worst violation of ||k.omega|| >= threshold(k).
template <class Threshold>
FlagResult scan_flag(const Frequency& omega, std::int64_t n, bool strict, Threshold&& threshold) {
  FlagResult flag;
  flag.checked_up_to = n;
  double worst_ratio = 1.0;
  for_each_lattice_point(omega.dim, n, [&](std::int64_t k1, std::int64_t k2) {
    const double v = lattice_norm(omega, k1, k2);
    const double t = threshold(k1, k2);
    const bool ok = strict ? v > t : v >= t;
    if (ok) return;
    const double ratio = t > 0.0 ? v / t : 0.0;
    if (flag.holds || ratio < worst_ratio) {
      flag.holds = false;
      worst_ratio = ratio;
      flag.witness = Witness{{k1, k2}, v, t};
    }
  });
  return flag;
}

}  // namespace

FrequencyClass classify_frequency(const Frequency& omega, const ClassifyParams& params) {
  auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_open_unit(params.c) || !(params.A > 2.0) || !in_open_unit(params.gamma1) ||
      !in_open_unit(params.gamma2) || !in_open_unit(params.eps) || params.N < 2) {
    throw std::invalid_argument("classify_frequency: parameters out of range");
  }
  const std::int64_t cutoff = params.full_cutoff > 0 ? params.full_cutoff : (omega.dim == 1 ? 100000 : 1000);
  FrequencyClass out;
  out.dioph_full = scan_flag(omega, cutoff, true, [&](std::int64_t k1, std::int64_t k2) {
    return params.c * std::pow(static_cast<double>(std::abs(k1) + std::abs(k2)), -params.A);
  });
  const auto N = static_cast<double>(params.N);
  const auto window = static_cast<std::int64_t>(std::floor(std::pow(N, params.gamma2) + 1e-12));
  const double window_threshold = std::pow(N, -params.gamma1);
  out.dioph_window = scan_flag(omega, std::max<std::int64_t>(window, 0), false,
                               [&](std::int64_t, std::int64_t) { return window_threshold; });
  if (omega.dim == 1) {
    const double t = params.c * std::pow(N, -(1.0 + params.eps));
    out.in_T_ceN = scan_flag(omega, params.N, false, [&](std::int64_t, std::int64_t) { return t; });
  }
  return out;
}

BadGridScan bad_grid_scan(std::int64_t n_bar, std::int64_t n0, double mu, int grid_dim) {
  if (n0 < 1 || n_bar < n0) throw std::invalid_argument("bad_grid_scan: need Nbar >= N0 >= 1");
  if (!(mu > 0.0 && mu < 0.5)) throw std::invalid_argument("bad_grid_scan: mu must lie in (0, 1/2)");
  if (grid_dim != 1 && grid_dim != 2) throw std::invalid_argument("bad_grid_scan: grid_dim must be 1 or 2");
  BadGridScan out;
  out.dim = grid_dim;
  const double limit = mu * static_cast<double>(n_bar);
  // ||k.j / Nbar|| < mu  <=>  min(r, Nbar - r) < mu Nbar with r = k.j mod Nbar.
  auto is_bad = [&](std::int64_t j1, std::int64_t j2) {
    bool bad = false;
    for_each_lattice_point(grid_dim, n0, [&](std::int64_t k1, std::int64_t k2) {
      if (bad) return;
      std::int64_t r = (k1 * j1 + k2 * j2) % n_bar;
      if (r < 0) r += n_bar;
      const std::int64_t dist = std::min(r, n_bar - r);
      if (static_cast<double>(dist) < limit) bad = true;
    });
    return bad;
  };
  const auto nb = static_cast<double>(n_bar);
  const auto k0 = static_cast<double>(n0);
  if (grid_dim == 1) {
    for (std::int64_t j = 1; j <= n_bar; ++j) {
      if (is_bad(j, 0)) out.indices.push_back({j, 0});
    }
    out.bound = 2.0 * mu * k0 * nb + k0 * k0;
  } else {
    for (std::int64_t j1 = 1; j1 <= n_bar; ++j1) {
      for (std::int64_t j2 = 1; j2 <= n_bar; ++j2) {
        if (is_bad(j1, j2)) out.indices.push_back({j1, j2});
      }
    }
    const double main_term = mu * k0 * k0 * nb * nb;
    out.bound = main_term + k0 * k0 * k0 * nb;
    out.measured_constant = (static_cast<double>(out.indices.size()) - main_term) / (k0 * k0 * k0 * nb);
  }
  return out;
}

}  // namespace cocycle::diophantine
