#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cocycle/extended_precision.hpp"

namespace cocycle {

/// Reduces t into [0, 1) with subtract-floor semantics.
double wrap_unit(double t);

/// A point of T^2. Coordinates are kept reduced into [0, 1).
struct TorusPoint {
  double x1 = 0.0;
  double x2 = 0.0;

  static TorusPoint wrapped(double x1, double x2) { return {wrap_unit(x1), wrap_unit(x2)}; }

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

/// Euclidean distance on T^2 (each coordinate difference taken mod 1).
double torus_distance(TorusPoint a, TorusPoint b);

enum class DynamicsKind { Shift, SkewShift };

/// Shift (x1, x2) -> (x1 + w1, x2 + w2) or skew-shift (x1, x2) -> (x1 + x2, x2 + w).
class Dynamics {
 public:
  static Dynamics shift(double omega1, double omega2);
  static Dynamics skew_shift(double omega);

  [[nodiscard]] DynamicsKind kind() const { return kind_; }
  [[nodiscard]] bool is_shift() const { return kind_ == DynamicsKind::Shift; }
  [[nodiscard]] double omega1() const { return omega1_; }
  /// Zero for the skew-shift.
  [[nodiscard]] double omega2() const { return omega2_; }
  [[nodiscard]] std::string describe() const;

  /// Single application of the map.
  [[nodiscard]] TorusPoint step(TorusPoint x) const;

  friend bool operator==(const Dynamics&, const Dynamics&) = default;

 private:
  Dynamics(DynamicsKind kind, double w1, double w2) : kind_(kind), omega1_(w1), omega2_(w2) {}

  DynamicsKind kind_ = DynamicsKind::Shift;
  double omega1_ = 0.0;
  double omega2_ = 0.0;
};

/// Closed form of the m-th skew-shift iterate:
/// (x1 + m x2 + m(m-1)/2 w, x2 + m w) mod 1. Negative m gives the inverse map.
TorusPoint skew_closed_form(double omega, TorusPoint x, std::int64_t m);

/// T^n x. Negative n is allowed (both maps are invertible).
TorusPoint iterate(const Dynamics& dyn, TorusPoint x, std::int64_t n);

/// Streams the orbit x, T x, T^2 x, ... with double-double phase state so the
/// drift after 10^6 steps stays far below double resolution.
class OrbitStepper {
 public:
  OrbitStepper(const Dynamics& dyn, TorusPoint start);

  [[nodiscard]] TorusPoint current() const;
  void advance();

 private:
  Dynamics dyn_;
  xp::DoubleDouble x1_;
  xp::DoubleDouble x2_;
};

/// Returns f(T^k x) for k = 1..count.
template <class F>
std::vector<double> orbit_fold(const Dynamics& dyn, TorusPoint x, std::size_t count, F&& f) {
  std::vector<double> out;
  out.reserve(count);
  OrbitStepper stepper(dyn, x);
  for (std::size_t k = 0; k < count; ++k) {
    stepper.advance();
    out.push_back(f(stepper.current()));
  }
  return out;
}

}  // namespace cocycle
