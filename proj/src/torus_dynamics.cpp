#include "cocycle/torus_dynamics.hpp"

#include <cmath>
#include <sstream>

namespace cocycle {

double wrap_unit(double t) {
  const double r = t - std::floor(t);
  return r >= 1.0 ? 0.0 : r;
}

double torus_distance(TorusPoint a, TorusPoint b) {
  auto circle = [](double d) {
    const double r = std::abs(d - std::round(d));
    return r;
  };
  return std::hypot(circle(a.x1 - b.x1), circle(a.x2 - b.x2));
}

Dynamics Dynamics::shift(double omega1, double omega2) {
  return {DynamicsKind::Shift, wrap_unit(omega1), wrap_unit(omega2)};
}

Dynamics Dynamics::skew_shift(double omega) { return {DynamicsKind::SkewShift, wrap_unit(omega), 0.0}; }

std::string Dynamics::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (is_shift()) {
    os << "shift(" << omega1_ << ", " << omega2_ << ")";
  } else {
    os << "skew_shift(" << omega1_ << ")";
  }
  return os.str();
}

TorusPoint Dynamics::step(TorusPoint x) const {
  if (is_shift()) return TorusPoint::wrapped(x.x1 + omega1_, x.x2 + omega2_);
  return TorusPoint::wrapped(x.x1 + x.x2, x.x2 + omega1_);
}

TorusPoint skew_closed_form(double omega, TorusPoint x, std::int64_t m) {
  using xp::DoubleDouble;
  const __int128 mm = m;
  // m(m-1)/2 is an integer for every integer m; the product is exact in 128 bits.
  const __int128 triangle = mm * (mm - 1) / 2;
  DoubleDouble first = xp::add(xp::frac_mul(mm, x.x2), xp::frac_mul(triangle, omega));
  first = xp::frac(xp::add(first, x.x1));
  const DoubleDouble second = xp::frac(xp::add(xp::frac_mul(mm, omega), x.x2));
  return {xp::to_unit_interval(first), xp::to_unit_interval(second)};
}

TorusPoint iterate(const Dynamics& dyn, TorusPoint x, std::int64_t n) {
  if (n == 0) return x;
  if (!dyn.is_shift()) return skew_closed_form(dyn.omega1(), x, n);
  const auto a = xp::frac(xp::add(xp::frac_mul(n, dyn.omega1()), x.x1));
  const auto b = xp::frac(xp::add(xp::frac_mul(n, dyn.omega2()), x.x2));
  return {xp::to_unit_interval(a), xp::to_unit_interval(b)};
}

OrbitStepper::OrbitStepper(const Dynamics& dyn, TorusPoint start)
    : dyn_(dyn), x1_{start.x1, 0.0}, x2_{start.x2, 0.0} {}

TorusPoint OrbitStepper::current() const { return {xp::to_unit_interval(x1_), xp::to_unit_interval(x2_)}; }

void OrbitStepper::advance() {
  if (dyn_.is_shift()) {
    x1_ = xp::frac(xp::add(x1_, dyn_.omega1()));
    x2_ = xp::frac(xp::add(x2_, dyn_.omega2()));
  } else {
    x1_ = xp::frac(xp::add(x1_, x2_));
    x2_ = xp::frac(xp::add(x2_, dyn_.omega1()));
  }
}

}  // namespace cocycle
