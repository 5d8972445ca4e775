#include "cocycle/ergodic_tools.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cocycle/diophantine.hpp"
#include "cocycle/extended_precision.hpp"
#include "cocycle/rng.hpp"

namespace cocycle::ergodic {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBumpMass = 512.0 / 693.0;  // int_{-1}^{1} (1 - u^2)^5 du

// Coefficients of p(u) = (1 - u^2)^5 in powers of u.
constexpr std::array<double, 11> kBump{1, 0, -5, 0, 10, 0, -10, 0, 5, 0, -1};

double bump_derivative(int m, double u) {
  double acc = 0.0;
  for (int k = static_cast<int>(kBump.size()) - 1; k >= m; --k) {
    double c = kBump[static_cast<std::size_t>(k)];
    for (int t = 0; t < m; ++t) c *= static_cast<double>(k - t);
    acc = acc * u + c;
  }
  return acc;
}

std::complex<double> unit_phase(xp::DoubleDouble t) {
  const double r = xp::to_unit_interval(xp::frac(t));
  return {std::cos(kTwoPi * r), std::sin(kTwoPi * r)};
}

std::vector<double> sample_nodes(const Potential& f, const Quadrature& q) {
  std::vector<double> v;
  v.reserve(q.m * q.m);
  const auto md = static_cast<double>(q.m);
  for (std::size_t i = 0; i < q.m; ++i) {
    const double x1 = (static_cast<double>(i) + q.theta1) / md;
    for (std::size_t j = 0; j < q.m; ++j) v.push_back(f(x1, (static_cast<double>(j) + q.theta2) / md));
  }
  return v;
}

}  // namespace

Mollifier::Mollifier(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 0.25)) throw std::invalid_argument("mollifier: tau must lie in (0, 1/4)");
}

double Mollifier::derivative(int m, double y) const {
  if (m < 0 || m > 5) throw std::invalid_argument("mollifier: derivative order must be 0..5");
  double r = y - std::round(y);
  const double u = r / tau_;
  if (std::abs(u) >= 1.0) return 0.0;
  return bump_derivative(m, u) / (kBumpMass * std::pow(tau_, m + 1));
}

std::array<double, 5> Mollifier::derivative_constants() {
  std::array<double, 5> out{};
  constexpr int samples = 20001;
  for (int m = 0; m < 5; ++m) {
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double u = -1.0 + 2.0 * i / (samples - 1);
      best = std::max(best, std::abs(bump_derivative(m, u)));
    }
    out[static_cast<std::size_t>(m)] = best / kBumpMass;
  }
  return out;
}

std::array<double, 5> Mollifier::l1_constants() {
  std::array<double, 5> out{};
  constexpr int intervals = 20000;  // even, for Simpson
  const double h = 2.0 / intervals;
  for (int m = 0; m < 5; ++m) {
    CompensatedSum s;
    for (int i = 0; i <= intervals; ++i) {
      const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s.add(w * std::abs(bump_derivative(m, -1.0 + i * h)));
    }
    out[static_cast<std::size_t>(m)] = s.value() * h / 3.0 / kBumpMass;
  }
  return out;
}

double RegularizedAbs::operator()(double y) const {
  const double a = std::abs(y);
  if (a >= delta) return a;
  return 0.5 * delta + y * y / (2.0 * delta);
}

double chi_delta(double y, double delta) {
  const double a = std::abs(y);
  if (a <= delta) return 1.0;
  if (a >= 2.0 * delta) return 0.0;
  const double t = (2.0 * delta - a) / delta;
  return t * t * (3.0 - 2.0 * t);
}

ExpSum exp_sum_linear(double theta, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("exp_sum_linear: N must be >= 1");
  CompensatedSum re, im;
  for (std::int64_t m = 1; m <= n; ++m) {
    const auto z = unit_phase(xp::frac_mul(m, theta));
    re.add(z.real());
    im.add(z.imag());
  }
  const auto nd = static_cast<double>(n);
  return {{re.value(), im.value()}, 2.0 * nd / (1.0 + nd * diophantine::torus_norm(theta))};
}

WeylSum weyl_sum_quadratic(double alpha, double beta, std::int64_t n, double eps) {
  if (n < 1) throw std::invalid_argument("weyl_sum_quadratic: N must be >= 1");
  CompensatedSum re, im;
  for (std::int64_t k = 1; k <= n; ++k) {
    const __int128 kk = static_cast<__int128>(k) * k;
    const auto z = unit_phase(xp::add(xp::frac_mul(kk, alpha), xp::frac_mul(k, beta)));
    re.add(z.real());
    im.add(z.imag());
  }
  return {{re.value(), im.value()}, std::pow(static_cast<double>(n), 0.5 + eps)};
}

double min_inv_sum(double alpha, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("min_inv_sum: N must be >= 1");
  const auto nd = static_cast<double>(n);
  CompensatedSum s;
  for (std::int64_t k = 1; k <= n; ++k) {
    const double d = diophantine::torus_norm(xp::frac_mul(k, alpha).value());
    s.add(d * nd <= 1.0 ? nd : 1.0 / d);
  }
  return s.value();
}

double min_inv_sum_reference(std::int64_t n, double c, double eps) {
  const auto nd = static_cast<double>(n);
  return std::pow(nd, 1.0 + eps) * std::log(nd) / c;
}

MollifyResult mollify(const Potential& f, double tau) {
  const Mollifier h(tau);
  const auto m = static_cast<std::size_t>(std::max(512.0, std::ceil(8.0 / tau)));
  const auto md = static_cast<double>(m);
  const auto reach = static_cast<std::ptrdiff_t>(std::floor(tau * md));
  std::vector<double> weights;
  CompensatedSum mass;
  for (std::ptrdiff_t k = -reach; k <= reach; ++k) {
    weights.push_back(h(static_cast<double>(k) / md));
    mass.add(weights.back());
  }
  for (double& w : weights) w /= mass.value();

  const std::vector<double> samples = sample_on_grid(f, m);
  const auto mi = static_cast<std::ptrdiff_t>(m);
  auto wrap = [mi](std::ptrdiff_t i) { return static_cast<std::size_t>(((i % mi) + mi) % mi); };
  std::vector<double> pass(m * m, 0.0);
  std::vector<double> out(m * m, 0.0);
  // Separable: smooth along x2, then along x1.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -reach; k <= reach; ++k) {
        acc += weights[static_cast<std::size_t>(k + reach)] *
               samples[i * m + wrap(static_cast<std::ptrdiff_t>(j) - k)];
      }
      pass[i * m + j] = acc;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -reach; k <= reach; ++k) {
        acc += weights[static_cast<std::size_t>(k + reach)] * pass[wrap(static_cast<std::ptrdiff_t>(i) - k) * m + j];
      }
      out[i * m + j] = acc;
    }
  }
  MollifyResult r;
  r.grid = m;
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    r.max_deviation = std::max(r.max_deviation, std::abs(out[idx] - samples[idx]));
  }
  const HolderData& fh = f.holder();
  r.bound = std::isinf(fh.holder_constant) ? fh.holder_constant : fh.holder_constant * std::pow(tau, fh.alpha);
  const auto l1 = Mollifier::l1_constants();
  for (int k = 0; k < 5; ++k) {
    r.derivative_bounds[static_cast<std::size_t>(k)] = fh.sup_norm * l1[static_cast<std::size_t>(k)] * std::pow(tau, -k);
  }
  r.psi = Potential::grid(m, std::move(out), 1.0);
  return r;
}

BirkhoffReport birkhoff_vs_space(const Potential& psi, const Dynamics& dyn, TorusPoint x, std::int64_t n,
                                 double space_average) {
  if (n < 1) throw std::invalid_argument("birkhoff_vs_space: N must be >= 1");
  OrbitStepper stepper(dyn, x);
  CompensatedSum s;
  for (std::int64_t k = 0; k < n; ++k) {
    stepper.advance();
    s.add(psi(stepper.current()));
  }
  BirkhoffReport r;
  r.orbit_average = s.value() / static_cast<double>(n);
  r.space_average = space_average;
  r.gap = std::abs(r.orbit_average - r.space_average);
  return r;
}

BirkhoffReport birkhoff_vs_space(const Potential& psi, const Dynamics& dyn, TorusPoint x, std::int64_t n,
                                 const Quadrature& q) {
  if (psi.is_constant()) return birkhoff_vs_space(psi, dyn, x, n, psi.parameter());
  return birkhoff_vs_space(psi, dyn, x, n, tensor_average([&](TorusPoint p) { return psi(p); }, q));
}

LevelSetSampler::LevelSetSampler(const Potential& f, const Quadrature& q) : sorted_(sample_nodes(f, q)) {
  std::sort(sorted_.begin(), sorted_.end());
}

double LevelSetSampler::measure(double xi, double delta) const {
  const auto lo = std::upper_bound(sorted_.begin(), sorted_.end(), xi - delta);
  const auto hi = std::lower_bound(lo, sorted_.end(), xi + delta);
  return static_cast<double>(hi - lo) / static_cast<double>(sorted_.size());
}

LevelSetReport level_set_report(const Potential& f, const Dynamics& dyn, TorusPoint x, std::int64_t n, double xi,
                                double delta, const Quadrature& q) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("level_set_report: delta must lie in (0, 1)");
  LevelSetReport r;
  OrbitStepper stepper(dyn, x);
  CompensatedSum chi;
  for (std::int64_t k = 0; k < n; ++k) {
    stepper.advance();
    const double d = f(stepper.current()) - xi;
    if (std::abs(d) < delta) ++r.hits;
    chi.add(chi_delta(d, delta));
  }
  r.chi_orbit_sum = chi.value();
  const LevelSetSampler sampler(f, q);
  r.measure_delta = sampler.measure(xi, delta);
  r.measure_2delta = sampler.measure(xi, 2.0 * delta);
  r.chi_average = tensor_average([&](TorusPoint p) { return chi_delta(f(p) - xi, delta); }, q);
  r.bound = r.measure_2delta + (1.0 + f.holder().grad_bound) * std::sqrt(delta);
  return r;
}

ExceptionalScan exceptional_xi_scan(const Potential& f, double delta, const std::vector<double>& xi_grid,
                                    const Quadrature& q) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("exceptional_xi_scan: delta must lie in (0, 1)");
  const double b0 = f.holder().sup_norm;
  for (double xi : xi_grid) {
    if (std::abs(xi) > b0 + 1e-12) throw std::invalid_argument("exceptional_xi_scan: xi outside [-B0, B0]");
  }
  const LevelSetSampler sampler(f, q);
  ExceptionalScan out;
  const double threshold = std::sqrt(delta);
  for (double xi : xi_grid) {
    const double mes = sampler.measure(xi, delta);
    out.measures.push_back(mes);
    if (mes > threshold) out.xi.push_back(xi);
  }
  if (!xi_grid.empty()) {
    out.exceptional_fraction = static_cast<double>(out.xi.size()) / static_cast<double>(xi_grid.size());
  }
  out.exceptional_measure = out.exceptional_fraction * 2.0 * b0;
  return out;
}

double clamped_log(double v) {
  const double a = std::abs(v);
  return a > 0.0 ? std::max(std::log(a), kLogFloor) : kLogFloor;
}

LogAverage log_average(const Potential& f, double xi, std::optional<double> delta, const Quadrature& q) {
  if (delta && !(*delta > 0.0 && *delta < 1.0)) throw std::invalid_argument("log_average: delta must lie in (0, 1)");
  LogAverage out;
  std::size_t clamped = 0;
  out.raw = tensor_average(
      [&](TorusPoint p) {
        const double a = std::abs(f(p) - xi);
        if (!(a > 1e-300)) ++clamped;
        return clamped_log(a);
      },
      q);
  out.clamped_nodes = clamped;
  if (delta) {
    const RegularizedAbs rho{*delta};
    out.regularized = tensor_average([&](TorusPoint p) { return std::log(rho(f(p) - xi)); }, q);
  }
  return out;
}

std::vector<double> orbit_log_deviations(const Potential& f, const Dynamics& dyn, std::int64_t n, double xi,
                                         double reference, std::size_t phase_samples, std::uint64_t seed,
                                         const WorkerPool& pool) {
  return pool.map(phase_samples, [&](std::size_t i) {
    auto rng = stream_for(seed, i);
    const double x1 = uniform01(rng);
    const double x2 = uniform01(rng);
    OrbitStepper stepper(dyn, {x1, x2});
    CompensatedSum s;
    for (std::int64_t k = 0; k < n; ++k) {
      stepper.advance();
      s.add(clamped_log(f(stepper.current()) - xi));
    }
    return s.value() / static_cast<double>(n) - reference;
  });
}

DeviationMeasure deviation_measure(const Potential& f, const Dynamics& dyn, std::int64_t n, double xi, double tol,
                                   std::size_t phase_samples, std::uint64_t seed, const WorkerPool& pool,
                                   const Quadrature& q) {
  if (phase_samples < 100) throw std::invalid_argument("deviation_measure: need at least 100 phase samples");
  if (n < 1) throw std::invalid_argument("deviation_measure: N must be >= 1");
  DeviationMeasure out;
  out.reference = log_average(f, xi, std::nullopt, q).raw;
  const auto dev = orbit_log_deviations(f, dyn, n, xi, out.reference, phase_samples, seed, pool);
  const auto hits = static_cast<std::size_t>(std::count_if(dev.begin(), dev.end(), [&](double d) { return std::abs(d) > tol; }));
  out.proportion = wilson(hits, phase_samples);
  return out;
}

}  // namespace cocycle::ergodic
