#include <cmath>
#include <random>

#include "cocycle/potential.hpp"
#include "cocycle/rng.hpp"
#include "cocycle/torus_dynamics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cocycle;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

bool in_unit_square(TorusPoint p) { return p.x1 >= 0.0 && p.x1 < 1.0 && p.x2 >= 0.0 && p.x2 < 1.0; }

double coord_gap(TorusPoint a, TorusPoint b) {
  return std::max(oracle::circle_gap(a.x1, b.x1), oracle::circle_gap(a.x2, b.x2));
}

}  // namespace

TEST_SUITE("torus_dynamics") {
  TEST_CASE("wrap reduces into the half-open unit interval") {
    CHECK(wrap_unit(1.0) == 0.0);
    CHECK(wrap_unit(-0.25) == 0.75);
    CHECK(wrap_unit(-1e-20) == 0.0);
    CHECK(wrap_unit(3.5) == 0.5);
    const auto p = TorusPoint::wrapped(-0.1, 2.3);
    CHECK(p.x1 == doctest::Approx(0.9));
    CHECK(p.x2 == doctest::Approx(0.3));
  }

  TEST_CASE("frequencies are reduced mod 1") {
    const auto d = Dynamics::shift(1.25, -0.5);
    CHECK(d.omega1() == 0.25);
    CHECK(d.omega2() == 0.5);
    CHECK(Dynamics::skew_shift(2.75).omega1() == 0.75);
  }

  TEST_CASE("period-4 shift returns home") {
    const auto p = iterate(Dynamics::shift(0.25, 0.5), {0.0, 0.0}, 4);
    CHECK(p == TorusPoint{0.0, 0.0});
  }

  TEST_CASE("skew shift with omega one half returns home after four steps") {
    CHECK(iterate(Dynamics::skew_shift(0.5), {0.0, 0.0}, 4) == TorusPoint{0.0, 0.0});
    CHECK(skew_closed_form(0.5, {0.0, 0.0}, 4) == TorusPoint{0.0, 0.0});
  }

  TEST_CASE("zero iterations are the identity") {
    const TorusPoint x{0.123, 0.987};
    CHECK(iterate(Dynamics::skew_shift(0.3), x, 0) == x);
    CHECK(iterate(Dynamics::shift(0.3, 0.1), x, 0) == x);
    CHECK(skew_closed_form(0.77, x, 0) == x);
  }

  TEST_CASE("closed form matches stepwise iteration") {
    const auto dyn = Dynamics::skew_shift(0.3);
    TorusPoint p{0.1, 0.2};
    for (int m = 1; m <= 10; ++m) {
      p = dyn.step(p);
      const auto c = skew_closed_form(0.3, {0.1, 0.2}, m);
      CHECK(coord_gap(p, c) <= 1e-12);
      if (m == 3) CHECK(coord_gap(iterate(dyn, {0.1, 0.2}, 3), p) <= 1e-15);
    }
  }

  TEST_CASE("closed form is exact on dyadic inputs") {
    const double omega = 3.0 / 1024.0;
    const double x1 = 5.0 / 64.0;
    const double x2 = 7.0 / 128.0;
    const auto dyn = Dynamics::skew_shift(omega);
    TorusPoint p{x1, x2};
    for (std::int64_t m = 1; m <= 20000; ++m) {
      p = dyn.step(p);
      if (m % 997 == 0 || m == 20000) {
        const auto [e1, e2] = oracle::exact_skew(omega, x1, x2, static_cast<std::uint64_t>(m));
        CHECK(skew_closed_form(omega, {x1, x2}, m) == TorusPoint{e1, e2});
        CHECK(p == TorusPoint{e1, e2});
      }
    }
    for (std::int64_t m : {100000LL, 1000000LL, 123456789LL}) {
      const auto [e1, e2] = oracle::exact_skew(omega, x1, x2, static_cast<std::uint64_t>(m));
      CHECK(skew_closed_form(omega, {x1, x2}, m) == TorusPoint{e1, e2});
    }
  }

  TEST_CASE("closed form tracks the exact orbit of double inputs") {
    // Every double >= 2^-11 is a multiple of 2^-64, so the oracle is exact.
    auto rng = stream_for(11, 0);
    for (int trial = 0; trial < 50; ++trial) {
      const double omega = uniform(rng, 0.01, 0.99);
      const double x1 = uniform(rng, 0.01, 0.99);
      const double x2 = uniform(rng, 0.01, 0.99);
      for (std::int64_t m : {1LL, 17LL, 1000LL, 99999LL, 100000LL, 3000000LL}) {
        const auto [e1, e2] = oracle::exact_skew(omega, x1, x2, static_cast<std::uint64_t>(m));
        const auto c = skew_closed_form(omega, {x1, x2}, m);
        CHECK(coord_gap(c, {e1, e2}) <= 1e-15);
      }
    }
  }

  TEST_CASE("semigroup property") {
    auto rng = stream_for(12, 0);
    for (int trial = 0; trial < 40; ++trial) {
      const TorusPoint x{uniform01(rng), uniform01(rng)};
      const auto m = uniform_int(rng, 0, 1000000);
      const auto n = uniform_int(rng, 0, 1000000);
      const auto shift = Dynamics::shift(uniform01(rng), uniform01(rng));
      CHECK(coord_gap(iterate(shift, iterate(shift, x, m), n), iterate(shift, x, m + n)) <= 1e-12);

      // Dyadic data: the intermediate point is stored exactly.
      const double w = static_cast<double>(uniform_int(rng, 1, 1 << 20)) / (1 << 20);
      const TorusPoint xd{static_cast<double>(uniform_int(rng, 0, 4095)) / 4096,
                          static_cast<double>(uniform_int(rng, 0, 4095)) / 4096};
      const auto skew = Dynamics::skew_shift(w);
      CHECK(coord_gap(iterate(skew, iterate(skew, xd, m), n), iterate(skew, xd, m + n)) <= 1e-12);

      // Generic doubles: rounding the intermediate x2 by u = 2^-53 moves x1 by
      // up to n u after n further steps.
      const auto skew2 = Dynamics::skew_shift(uniform01(rng));
      const double allowance = 1e-12 + 2.0 * static_cast<double>(n) * std::ldexp(1.0, -53);
      CHECK(coord_gap(iterate(skew2, iterate(skew2, x, m), n), iterate(skew2, x, m + n)) <= allowance);
    }
  }

  TEST_CASE("orbits stay in the unit square") {
    auto rng = stream_for(13, 0);
    for (int trial = 0; trial < 200; ++trial) {
      const TorusPoint x{uniform01(rng), uniform01(rng)};
      const auto n = uniform_int(rng, -5000000, 5000000);
      CHECK(in_unit_square(iterate(Dynamics::skew_shift(uniform01(rng)), x, n)));
      CHECK(in_unit_square(iterate(Dynamics::shift(uniform01(rng), uniform01(rng)), x, n)));
    }
    // Values just below an integer must not round up to 1.
    CHECK(in_unit_square(skew_closed_form(std::nextafter(1.0, 0.0), {std::nextafter(1.0, 0.0), 0.5}, 3)));
  }

  TEST_CASE("negative iterates invert the map") {
    const auto dyn = Dynamics::skew_shift(kGolden);
    const TorusPoint x{0.31, 0.72};
    CHECK(coord_gap(iterate(dyn, iterate(dyn, x, 12345), -12345), x) <= 1e-12);
  }

  TEST_CASE("orbit fold of a constant") {
    const auto c = Potential::constant(2.5);
    const auto v = orbit_fold(Dynamics::skew_shift(kGolden), {0.3, 0.4}, 7, [&](TorusPoint p) { return c(p); });
    REQUIRE(v.size() == 7);
    for (double x : v) CHECK(x == 2.5);
  }

  TEST_CASE("orbit fold along a period-two orbit") {
    const auto v = orbit_fold(Dynamics::shift(0.5, 0.0), {0.0, 0.0}, 4, [](TorusPoint p) { return p.x1; });
    CHECK(v == std::vector<double>{0.5, 0.0, 0.5, 0.0});
  }

  TEST_CASE("orbit fold agrees with pointwise recomputation") {
    const auto dyn = Dynamics::skew_shift(kGolden);
    const auto f = Potential::cos1();
    const TorusPoint x{0.2, 0.9};
    const auto v = orbit_fold(dyn, x, 1000, [&](TorusPoint p) { return f(p); });
    double worst = 0.0;
    for (std::size_t k = 1; k <= 1000; ++k) {
      worst = std::max(worst, std::abs(v[k - 1] - f(iterate(dyn, x, static_cast<std::int64_t>(k)))));
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("stepper drift stays below 1e-10 after a million steps") {
    const auto dyn = Dynamics::skew_shift(kGolden);
    const TorusPoint x{0.11, 0.37};
    OrbitStepper s(dyn, x);
    for (int k = 0; k < 1000000; ++k) s.advance();
    CHECK(coord_gap(s.current(), skew_closed_form(kGolden, x, 1000000)) <= 1e-10);
  }

  TEST_CASE("torus distance uses the short way round") {
    CHECK(torus_distance({0.95, 0.0}, {0.05, 0.0}) == doctest::Approx(0.1));
    CHECK(torus_distance({0.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::sqrt(0.5)));
  }
}
