#pragma once

#include <cstddef>
#include <span>

namespace cocycle {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_mean(std::span<const double> v);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Sample mean and standard error (n - 1 denominator); stderr is 0 for n < 2.
MeanStderr mean_stderr(std::span<const double> v);

/// Binomial proportion with its Wilson 95% score interval.
struct Proportion {
  std::size_t hits = 0;
  std::size_t trials = 0;
  double fraction = 0.0;
  double low = 0.0;
  double high = 0.0;
  /// Half-width of [low, high].
  [[nodiscard]] double ci95() const { return 0.5 * (high - low); }
};

Proportion wilson(std::size_t hits, std::size_t trials);

/// Least-squares line y = intercept + slope x, with coefficient of determination.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace cocycle
