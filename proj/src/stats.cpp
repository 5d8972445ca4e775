#include "cocycle/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cocycle {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

double compensated_mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

MeanStderr mean_stderr(std::span<const double> v) {
  MeanStderr out;
  if (v.empty()) return out;
  out.mean = compensated_mean(v);
  if (v.size() < 2) return out;
  CompensatedSum ss;
  for (double x : v) ss.add((x - out.mean) * (x - out.mean));
  const auto n = static_cast<double>(v.size());
  out.stderr_ = std::sqrt(ss.value() / (n - 1.0) / n);
  return out;
}

Proportion wilson(std::size_t hits, std::size_t trials) {
  if (hits > trials) throw std::invalid_argument("wilson: hits exceed trials");
  Proportion p;
  p.hits = hits;
  p.trials = trials;
  if (trials == 0) {
    p.high = 1.0;
    return p;
  }
  constexpr double z = 1.959963984540054;
  const auto n = static_cast<double>(trials);
  const double f = static_cast<double>(hits) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (f + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(f * (1.0 - f) / n + z * z / (4.0 * n * n)) / denom;
  p.fraction = f;
  p.low = hits == 0 ? 0.0 : std::max(0.0, center - half);
  p.high = hits == trials ? 1.0 : std::min(1.0, center + half);
  return p;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need two or more points");
  const double mx = compensated_mean(x);
  const double my = compensated_mean(y);
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
    syy.add((y[i] - my) * (y[i] - my));
  }
  LineFit fit;
  if (sxx.value() == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy.value() > 0.0 ? (sxy.value() * sxy.value()) / (sxx.value() * syy.value()) : 1.0;
  return fit;
}

}  // namespace cocycle
