#include "cocycle/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cocycle/rng.hpp"

namespace cocycle::experiments {

namespace {

double log_or_floor(const SignedLogDet& f) { return f.sign == 0 ? ergodic::kLogFloor : f.log_abs; }

MeanStderr summarize(const std::vector<double>& v) { return mean_stderr(v); }

std::vector<double> minus(std::vector<double> d, double e) {
  for (double& v : d) v -= e;
  return d;
}

}  // namespace

SpectralWindow Model::window(TorusPoint x, std::int64_t a, std::int64_t b, double energy) const {
  SpectralWindow w;
  w.a = a;
  w.b = b;
  w.phase = x;
  w.dyn = dyn;
  w.potential = potential;
  w.coupling = coupling;
  w.energy = energy;
  return w;
}

std::vector<double> Model::onsite(TorusPoint x, std::int64_t a, std::size_t count) const {
  std::vector<double> v;
  v.reserve(count);
  OrbitStepper stepper(dyn, iterate(dyn, x, a));
  for (std::size_t k = 0; k < count; ++k) {
    v.push_back(coupling * potential(stepper.current()));
    stepper.advance();
  }
  return v;
}

TorusPoint sample_phase(std::uint64_t seed, std::uint64_t index) {
  auto rng = stream_for(seed, index);
  const double x1 = uniform01(rng);
  const double x2 = uniform01(rng);
  return {x1, x2};
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count == 0) throw std::invalid_argument("linear_grid: count must be positive");
  if (count == 1) return {lo};
  std::vector<double> g(count);
  const double h = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) g[i] = lo + static_cast<double>(i) * h;
  g.back() = hi;
  return g;
}

LyapunovEstimate lyapunov_estimate(const Model& model, double energy, std::int64_t n, std::size_t samples,
                                   std::uint64_t seed, const WorkerPool& pool) {
  if (n < 10 || samples < 10) throw std::invalid_argument("lyapunov_estimate: need N >= 10 and samples >= 10");
  std::vector<std::int64_t> scales{n / 8, n / 4, n / 2, n};
  const std::int64_t half = n / 2;
  struct PhaseResult {
    std::vector<double> rates;  // per scale
    double two_scale = 0.0;
  };
  const auto results = pool.map(samples, [&](std::size_t i) {
    const auto d = minus(model.onsite(sample_phase(seed, i), 1, static_cast<std::size_t>(n)), energy);
    LogScaledMatrix m = LogScaledMatrix::identity();
    PhaseResult r;
    r.rates.reserve(scales.size());
    double log_half = 0.0;
    std::size_t next = 0;
    for (std::int64_t k = 1; k <= n; ++k) {
      m.left_multiply_transfer(d[static_cast<std::size_t>(k - 1)]);
      if (k == half) log_half = m.log_norm();
      while (next < scales.size() && scales[next] == k) {
        r.rates.push_back(m.log_norm() / static_cast<double>(k));
        ++next;
      }
    }
    r.two_scale = (m.log_norm() - log_half) / static_cast<double>(n - half);
    return r;
  });
  LyapunovEstimate out;
  out.N = n;
  out.samples = samples;
  std::vector<double> column(samples);
  for (std::size_t s = 0; s < scales.size(); ++s) {
    for (std::size_t i = 0; i < samples; ++i) column[i] = results[i].rates[s];
    const auto ms = summarize(column);
    out.per_scale.push_back({scales[s], ms.mean, ms.stderr_});
  }
  out.raw_mean = out.per_scale.back().mean;
  for (std::size_t i = 0; i < samples; ++i) column[i] = results[i].two_scale;
  const auto ms = summarize(column);
  out.L_hat = std::max(0.0, ms.mean);
  out.stderr_ = ms.stderr_;
  return out;
}

ScaleConvergence scale_convergence_scan(const Model& model, double energy, const std::vector<std::int64_t>& scales,
                                        std::size_t samples, std::uint64_t seed, const WorkerPool& pool) {
  if (scales.empty() || samples == 0) throw std::invalid_argument("scale_convergence_scan: need scales and samples");
  for (std::size_t k = 0; k < scales.size(); ++k) {
    if (scales[k] < 1 || (k > 0 && scales[k] <= scales[k - 1]))
      throw std::invalid_argument("scale_convergence_scan: scales must be positive and increasing");
  }
  const std::int64_t top = scales.back();
  const auto per_phase = pool.map(samples, [&](std::size_t i) {
    const auto d = minus(model.onsite(sample_phase(seed, i), 1, static_cast<std::size_t>(top)), energy);
    const auto pre = prefix_determinants(d);
    std::vector<double> r;
    r.reserve(scales.size());
    for (std::int64_t ell : scales) r.push_back(log_or_floor(pre[static_cast<std::size_t>(ell)]) / static_cast<double>(ell));
    return r;
  });
  ScaleConvergence out;
  std::vector<double> column(samples);
  for (std::size_t k = 0; k < scales.size(); ++k) {
    for (std::size_t i = 0; i < samples; ++i) column[i] = per_phase[i][k];
    const auto ms = summarize(column);
    ScaleRow row;
    row.ell = scales[k];
    row.mean = ms.mean;
    row.stderr_ = ms.stderr_;
    row.gap = k == 0 ? 0.0 : std::abs(ms.mean - out.rows.back().mean);
    row.reference = 1.0 / std::sqrt(static_cast<double>(scales[k]));
    out.rows.push_back(row);
  }
  double env = 0.0;
  for (auto it = out.rows.rbegin(); it != out.rows.rend(); ++it) {
    env = std::max(env, it->gap);
    it->envelope = env;
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 1; k < out.rows.size(); ++k) {
    if (out.rows[k].gap > 0.0) {
      lx.push_back(std::log(static_cast<double>(out.rows[k].ell)));
      ly.push_back(std::log(out.rows[k].gap));
    }
  }
  if (lx.size() >= 2) out.gap_fit = fit_line(lx, ly);
  return out;
}

DeviationReport determinant_ldt(const Model& model, double energy, std::int64_t n, double kappa, std::size_t samples,
                                std::uint64_t seed, const WorkerPool& pool, std::optional<double> tol) {
  if (samples < 100) throw std::invalid_argument("determinant_ldt: need at least 100 samples");
  if (n < 1) throw std::invalid_argument("determinant_ldt: N must be positive");
  struct Value {
    double log_abs = 0.0;
    int sign = 1;
  };
  const auto values = pool.map(2 * samples, [&](std::size_t i) {
    const auto f = determinant(minus(model.onsite(sample_phase(seed, i), 1, static_cast<std::size_t>(n)), energy));
    return Value{log_or_floor(f), f.sign};
  });
  DeviationReport out;
  out.N = n;
  out.E = energy;
  out.tol = tol ? *tol : std::pow(static_cast<double>(n), 1.0 - kappa);
  CompensatedSum same, indep;
  for (std::size_t i = 0; i < samples; ++i) {
    same.add(values[i].log_abs);
    indep.add(values[samples + i].log_abs);
  }
  out.mean_log_det = same.value() / static_cast<double>(samples);
  out.independent_mean = indep.value() / static_cast<double>(samples);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    if (values[i].sign == 0 || std::abs(values[i].log_abs - out.mean_log_det) > out.tol) ++hits;
  }
  out.proportion = wilson(hits, samples);
  out.fraction = out.proportion.fraction;
  out.ci95 = out.proportion.ci95();
  return out;
}

UniformUpper uniform_upper_check(const Model& model, double energy, std::int64_t n, std::size_t sample_sup,
                                 std::uint64_t seed, double kappa, const WorkerPool& pool) {
  if (sample_sup < 1000) throw std::invalid_argument("uniform_upper_check: need at least 1000 phases");
  if (n < 1) throw std::invalid_argument("uniform_upper_check: N must be positive");
  const auto n0 = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  struct PhaseResult {
    double sup = -std::numeric_limits<double>::infinity();
    std::int64_t argmax = 0;
    double final_log_norm = 0.0;
  };
  const auto results = pool.map(sample_sup, [&](std::size_t i) {
    const auto d = minus(model.onsite(sample_phase(seed, i), 1, static_cast<std::size_t>(n)), energy);
    LogScaledMatrix m = LogScaledMatrix::identity();
    PhaseResult r;
    for (std::int64_t k = 1; k <= n; ++k) {
      m.left_multiply_transfer(d[static_cast<std::size_t>(k - 1)]);
      if (k >= n0) {
        const double rate = m.log_norm() / static_cast<double>(k);
        if (rate > r.sup) {
          r.sup = rate;
          r.argmax = k;
        }
      }
    }
    r.final_log_norm = m.log_norm();
    return r;
  });
  UniformUpper out;
  out.sup_rate = -std::numeric_limits<double>::infinity();
  CompensatedSum total;
  for (std::size_t i = 0; i < sample_sup; ++i) {
    total.add(results[i].final_log_norm);
    if (results[i].sup > out.sup_rate) {
      out.sup_rate = results[i].sup;
      out.argmax_n = results[i].argmax;
      out.argmax_phase = sample_phase(seed, i);
    }
  }
  out.mean_rate = total.value() / static_cast<double>(sample_sup) / static_cast<double>(n);
  out.excess = out.sup_rate - out.mean_rate;
  out.allowance = std::pow(static_cast<double>(n), -kappa);
  return out;
}

double ResonanceScan::flagged_fraction_at(double xi) const {
  std::size_t total = 0, flagged = 0;
  for (const auto& r : rows) {
    if (r.xi != xi) continue;
    ++total;
    if (r.flagged) ++flagged;
  }
  return total == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(total);
}

ResonanceScan resonance_scan(const Model& model, TorusPoint x0, const ResonanceParams& p, const WorkerPool& pool) {
  if (p.N < 1) throw std::invalid_argument("resonance_scan: N must be positive");
  if (p.n_bar.empty() || p.xi.empty()) throw std::invalid_argument("resonance_scan: need n_bar and xi values");
  const auto nd = static_cast<double>(p.N);
  for (std::int64_t nb : p.n_bar) {
    if (!(static_cast<double>(nb) > nd * nd)) throw std::invalid_argument("resonance_scan: each n_bar must exceed N^2");
    if (std::log(static_cast<double>(nb)) > std::pow(nd, p.beta))
      throw std::invalid_argument("resonance_scan: each n_bar must be at most exp(N^beta)");
  }
  const std::int64_t ell = p.ell > 0 ? p.ell : static_cast<std::int64_t>(std::ceil(std::pow(nd, 0.2)));
  const std::size_t level = std::min<std::size_t>(p.level, static_cast<std::size_t>(ell - 1));
  auto f = [&](TorusPoint x) {
    if (p.function == ResonanceFunction::Raw) return model.potential(x);
    const auto diag = model.onsite(x, 1, static_cast<std::size_t>(ell));
    const double tol = 1e-12 * (2.0 + std::abs(model.coupling) * model.potential.holder().sup_norm);
    return eigenvalues_sturm(diag, tol)[level];
  };

  // Node values in the tensor rule's visiting order, rows computed in parallel.
  const auto& q = p.quadrature;
  const auto md = static_cast<double>(q.m);
  const auto rows = pool.map(q.m, [&](std::size_t i) {
    std::vector<double> row(q.m);
    const double x1 = (static_cast<double>(i) + q.theta1) / md;
    for (std::size_t j = 0; j < q.m; ++j) row[j] = f({x1, (static_cast<double>(j) + q.theta2) / md});
    return row;
  });
  ResonanceScan out;
  out.threshold = std::pow(nd, -p.kappa);
  out.space_average.reserve(p.xi.size());
  for (double xi : p.xi) {
    std::size_t i = 0, j = 0;
    out.space_average.push_back(ergodic::tensor_average(
        [&](TorusPoint) {
          const double v = rows[i][j];
          if (++j == q.m) {
            j = 0;
            ++i;
          }
          return ergodic::clamped_log(v - xi);
        },
        q));
  }

  const auto orbit_values = pool.map(p.n_bar.size(), [&](std::size_t k) {
    OrbitStepper stepper(model.dyn, iterate(model.dyn, x0, p.n_bar[k]));
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(p.N));
    for (std::int64_t s = 1; s <= p.N; ++s) {
      stepper.advance();
      v.push_back(f(stepper.current()));
    }
    return v;
  });
  std::size_t flagged = 0;
  for (std::size_t k = 0; k < p.n_bar.size(); ++k) {
    for (std::size_t x = 0; x < p.xi.size(); ++x) {
      CompensatedSum s;
      for (double v : orbit_values[k]) s.add(ergodic::clamped_log(v - p.xi[x]));
      ResonanceRow row;
      row.n_bar = p.n_bar[k];
      row.xi = p.xi[x];
      row.deviation = s.value() / nd - out.space_average[x];
      row.flagged = std::abs(row.deviation) > out.threshold;
      if (row.flagged) ++flagged;
      out.rows.push_back(row);
    }
  }
  out.flagged_fraction = static_cast<double>(flagged) / static_cast<double>(out.rows.size());
  return out;
}

GreenDecayScan green_decay_scan(const Model& model, TorusPoint x0, std::int64_t n, std::int64_t n_bar,
                                const std::vector<double>& energies, const GreenDecayParams& params,
                                const WorkerPool& pool) {
  if (n < 2) throw std::invalid_argument("green_decay_scan: N must be at least 2");
  const TorusPoint y = iterate(model.dyn, x0, n_bar);
  const auto diag = model.onsite(y, 1, static_cast<std::size_t>(n));
  const auto spectrum = eigenvalues_sturm(diag, 0.0);
  const auto rows = pool.map(energies.size(), [&](std::size_t k) {
    GreenDecayRow row;
    row.E = energies[k];
    const auto nearest = std::lower_bound(spectrum.begin(), spectrum.end(), row.E);
    double dist = std::numeric_limits<double>::infinity();
    if (nearest != spectrum.end()) dist = std::min(dist, *nearest - row.E);
    if (nearest != spectrum.begin()) dist = std::min(dist, row.E - *std::prev(nearest));
    if (dist < 1e-9) {
      row.skipped = true;
      return row;
    }
    row.L0 = params.L0 ? *params.L0
                       : 0.5 * lyapunov_estimate(model, row.E, params.lyapunov_n, params.lyapunov_samples, params.seed)
                                   .L_hat;
    const auto d = minus(diag, row.E);
    const auto pre = prefix_determinants(d);
    const auto suf = suffix_determinants(d);
    if (pre.back().sign == 0) {
      row.skipped = true;
      return row;
    }
    row.max_excess = -std::numeric_limits<double>::infinity();
    for (std::int64_t m = 1; m <= n; ++m) {
      for (std::int64_t j = m + n / 2 + 1; j <= n; ++j) {
        const auto& left = pre[static_cast<std::size_t>(m - 1)];
        const auto& right = suf[static_cast<std::size_t>(j)];
        if (left.sign == 0 || right.sign == 0) continue;
        const double log_g = left.log_abs + right.log_abs - pre.back().log_abs;
        row.max_excess = std::max(row.max_excess, log_g + row.L0 * static_cast<double>(j - m) / 2.0);
      }
    }
    row.violates = row.max_excess > 0.0;
    return row;
  });
  GreenDecayScan out;
  out.rows = rows;
  std::size_t used = 0, bad = 0;
  for (const auto& r : rows) {
    if (r.skipped) {
      ++out.skipped;
      continue;
    }
    ++used;
    if (r.violates) ++bad;
  }
  out.violating_fraction = used == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(used);
  return out;
}

DecayProfile decay_profile(std::span<const double> psi, std::int64_t first, double tail_floor,
                           const std::vector<std::int64_t>& widths) {
  DecayProfile out;
  const auto n = static_cast<std::int64_t>(psi.size());
  if (n == 0) return out;
  CompensatedSum mass, moment;
  double peak = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double w = psi[static_cast<std::size_t>(k)] * psi[static_cast<std::size_t>(k)];
    mass.add(w);
    moment.add(w * static_cast<double>(k));
    peak = std::max(peak, std::abs(psi[static_cast<std::size_t>(k)]));
  }
  const auto c = static_cast<std::int64_t>(std::llround(moment.value() / mass.value()));
  out.center = first + c;

  // Cumulative mass by distance from the center.
  const std::int64_t reach = std::max(c, n - 1 - c);
  std::vector<double> cumulative(static_cast<std::size_t>(reach + 1));
  double acc = 0.0;
  auto sq = [&](std::int64_t k) { return psi[static_cast<std::size_t>(k)] * psi[static_cast<std::size_t>(k)]; };
  for (std::int64_t h = 0; h <= reach; ++h) {
    if (h == 0) {
      acc += sq(c);
    } else {
      if (c - h >= 0) acc += sq(c - h);
      if (c + h < n) acc += sq(c + h);
    }
    cumulative[static_cast<std::size_t>(h)] = acc;
  }
  const double total = cumulative.back();
  out.half_width = reach;
  for (std::int64_t h = 0; h <= reach; ++h) {
    if (cumulative[static_cast<std::size_t>(h)] >= 0.99 * total) {
      out.half_width = h;
      break;
    }
  }
  std::vector<std::int64_t> ws = widths;
  if (ws.empty()) {
    for (std::int64_t w = 2; w < 2 * reach; w *= 2) ws.push_back(w);
  }
  ws.push_back(2 * reach);
  std::sort(ws.begin(), ws.end());
  ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
  for (std::int64_t w : ws) {
    const std::int64_t h = std::min(w / 2, reach);
    out.mass_fraction.emplace_back(w, cumulative[static_cast<std::size_t>(h)] / total);
  }

  std::vector<double> xs, ys;
  for (std::int64_t k = 0; k < n; ++k) {
    const double a = std::abs(psi[static_cast<std::size_t>(k)]);
    if (k == c || !(a >= tail_floor * peak) || a == 0.0) continue;
    xs.push_back(static_cast<double>(std::abs(k - c)));
    ys.push_back(std::log(a));
  }
  if (xs.size() >= 3) {
    const auto fit = fit_line(xs, ys);
    out.fitted_rate = -fit.slope;
    out.fit_r2 = fit.r2;
  }
  return out;
}

LocalizationReport localization_profile(const Model& model, TorusPoint x0, std::int64_t n_box,
                                        const LocalizationParams& params, const WorkerPool& pool) {
  if (n_box < 50) throw std::invalid_argument("localization_profile: N_box must be at least 50");
  const auto size = static_cast<std::size_t>(2 * n_box + 1);
  const auto diag = model.onsite(x0, -n_box, size);
  const double scale = 2.0 + std::abs(model.coupling) * model.potential.holder().sup_norm;
  const auto dec = decompose(diag, 1e-12 * scale, 1e-8 * scale);
  LocalizationReport out;
  out.n_box = n_box;
  out.collar = static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(n_box), 0.75)));
  out.profiles = pool.map(dec.eigenvalues.size(), [&](std::size_t j) {
    auto prof = decay_profile(dec.eigenvectors[j], -n_box, params.tail_floor, params.widths);
    prof.E = dec.eigenvalues[j];
    prof.residual = dec.residuals[j];
    prof.L_hat = lyapunov_estimate(model, prof.E, params.lyapunov_n, params.lyapunov_samples, params.seed).L_hat;
    prof.edge_excluded = prof.center + n_box < out.collar || n_box - prof.center < out.collar;
    prof.localized = prof.L_hat >= params.L_min && prof.fitted_rate >= params.rho * prof.L_hat / 2.0;
    return prof;
  });
  std::size_t localized = 0;
  for (const auto& p : out.profiles) {
    if (p.edge_excluded) continue;
    ++out.counted;
    if (p.localized) ++localized;
  }
  out.localized_fraction = out.counted == 0 ? 0.0 : static_cast<double>(localized) / static_cast<double>(out.counted);
  return out;
}

double diag_gap(const Model& model, TorusPoint x, std::int64_t n, double energy) {
  const auto d = minus(model.onsite(x, 1, static_cast<std::size_t>(n)), energy);
  double log_diag = 0.0;
  for (double v : d) log_diag += ergodic::clamped_log(v);
  return std::abs(log_or_floor(determinant(d)) - log_diag);
}

DisorderReport large_disorder_check(const Model& model, std::int64_t n, const std::vector<double>& energies,
                                    std::size_t samples, std::uint64_t seed, double lambda0, const WorkerPool& pool) {
  if (!(std::abs(model.coupling) >= lambda0))
    throw std::invalid_argument("large_disorder_check: coupling below lambda0");
  if (n < 1 || samples < 2 || energies.empty()) throw std::invalid_argument("large_disorder_check: bad sizes");
  struct PhaseResult {
    std::vector<double> log_det;
    std::vector<double> gap;
  };
  const auto results = pool.map(samples, [&](std::size_t i) {
    const auto onsite = model.onsite(sample_phase(seed, i), 1, static_cast<std::size_t>(n));
    std::vector<double> d(onsite.size());
    PhaseResult r;
    r.log_det.reserve(energies.size());
    r.gap.reserve(energies.size());
    for (double e : energies) {
      double log_diag = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) {
        d[k] = onsite[k] - e;
        log_diag += ergodic::clamped_log(d[k]);
      }
      const double lf = log_or_floor(determinant(d));
      r.log_det.push_back(lf);
      r.gap.push_back(std::abs(lf - log_diag));
    }
    return r;
  });
  DisorderReport out;
  out.threshold = 0.5 * std::log(std::abs(model.coupling));
  out.ceiling = std::pow(std::abs(model.coupling), -0.125);
  std::vector<double> column(samples), gaps(samples);
  std::size_t failing = 0;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    for (std::size_t i = 0; i < samples; ++i) {
      column[i] = results[i].log_det[k] / static_cast<double>(n);
      gaps[i] = results[i].gap[k];
    }
    const auto ms = summarize(column);
    DisorderRow row;
    row.E = energies[k];
    row.mean_rate = ms.mean;
    row.stderr_ = ms.stderr_;
    row.pass = ms.mean > out.threshold;
    row.diag_gap_mean = compensated_mean(gaps);
    row.diag_gap_max = *std::max_element(gaps.begin(), gaps.end());
    if (!row.pass) ++failing;
    out.rows.push_back(row);
  }
  out.failing_fraction = static_cast<double>(failing) / static_cast<double>(energies.size());
  return out;
}

}  // namespace cocycle::experiments
