#pragma once

// Double-double helpers for phase arithmetic on the torus. Orbits of the
// skew-shift need frac(m(m-1)/2 * omega) for m far beyond 2^26, where a plain
// double product has no fractional bits left.

#include <cmath>
#include <cstdint>

namespace cocycle::xp {

/// Unevaluated sum hi + lo, |lo| <= ulp(hi) / 2 after normalization.
struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;

  [[nodiscard]] double value() const { return hi + lo; }
};

inline DoubleDouble two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

inline DoubleDouble quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

inline DoubleDouble two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DoubleDouble add(DoubleDouble a, DoubleDouble b) {
  DoubleDouble s = two_sum(a.hi, b.hi);
  const DoubleDouble t = two_sum(a.lo, b.lo);
  s.lo += t.hi;
  s = quick_two_sum(s.hi, s.lo);
  s.lo += t.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DoubleDouble add(DoubleDouble a, double b) { return add(a, DoubleDouble{b, 0.0}); }

/// Fractional part, result in [0, 1) as a double-double.
inline DoubleDouble frac(DoubleDouble a) {
  DoubleDouble r = two_sum(a.hi - std::floor(a.hi), a.lo);
  for (int pass = 0; pass < 2; ++pass) {
    const double shift = std::floor(r.hi + r.lo);
    if (shift == 0.0) break;
    DoubleDouble t = two_sum(r.hi, -shift);
    t.lo += r.lo;
    r = quick_two_sum(t.hi, t.lo);
  }
  return r;
}

/// frac(k * w) for a signed 128-bit integer k, computed exactly up to
/// double-double rounding. k is split into 53-bit limbs so each partial
/// product is captured by two_prod without loss.
inline DoubleDouble frac_mul(__int128 k, double w) {
  if (k == 0 || w == 0.0) return {};
  const bool negative = k < 0;
  unsigned __int128 mag = negative ? static_cast<unsigned __int128>(-k)
                                   : static_cast<unsigned __int128>(k);
  constexpr unsigned __int128 kLimbMask = (static_cast<unsigned __int128>(1) << 53) - 1;
  DoubleDouble acc{};
  int limb = 0;
  while (mag != 0) {
    const auto digit = static_cast<double>(static_cast<std::uint64_t>(mag & kLimbMask));
    double scaled = std::ldexp(w, 53 * limb);
    scaled -= std::floor(scaled);
    acc = frac(add(acc, frac(two_prod(digit, scaled))));
    mag >>= 53;
    ++limb;
  }
  if (negative) acc = frac(DoubleDouble{-acc.hi, -acc.lo});
  return acc;
}

/// Rounds a double-double known to lie in [0, 1] to a double in [0, 1).
inline double to_unit_interval(DoubleDouble a) {
  const double v = a.hi + a.lo;
  if (v >= 1.0 || v < 0.0) return 0.0;
  return v;
}

}  // namespace cocycle::xp
