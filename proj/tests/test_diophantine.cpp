#include <cmath>
#include <numeric>
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "cocycle/diophantine.hpp"
#include "cocycle/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cocycle;
using namespace cocycle::diophantine;
namespace mp = boost::multiprecision;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

// A double omega in (0, 1) is exactly num / 2^64.
mp::cpp_int numerator64(double omega) { return mp::cpp_int(static_cast<std::uint64_t>(std::ldexp(omega, 64))); }

// Exact ||m omega|| >= a / q for omega = num / 2^64.
bool norm_at_least(const mp::cpp_int& num, std::int64_t m, std::int64_t a, std::int64_t q) {
  const mp::cpp_int den = mp::cpp_int(1) << 64;
  const mp::cpp_int r = (num * m) % den;
  const mp::cpp_int dist = r < den - r ? r : den - r;
  return dist * q >= den * a;
}

}  // namespace

TEST_SUITE("diophantine") {
  TEST_CASE("distance to the nearest integer") {
    CHECK(torus_norm(0.75) == 0.25);
    CHECK(torus_norm(-1.3) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(torus_norm(3.5) == 0.5);
    CHECK(torus_norm(0.0) == 0.0);
  }

  TEST_CASE("norm is symmetric under k -> -k") {
    auto rng = stream_for(21, 0);
    for (int i = 0; i < 1000; ++i) {
      const double w = uniform01(rng);
      const auto k = static_cast<double>(uniform_int(rng, 1, 100000));
      CHECK(torus_norm(k * w) == torus_norm(-k * w));
    }
  }

  TEST_CASE("golden mean has all partial quotients one") {
    const auto cf = continued_fraction(named_constant("golden"));
    REQUIRE(cf.depth() >= 30);
    CHECK_FALSE(cf.rational);
    std::int64_t fa = 1, fb = 1;
    for (int s = 1; s <= cf.depth(); ++s) {
      CHECK(cf.a(s) == 1);
      CHECK(cf.q(s) == fb);
      const std::int64_t next = fa + fb;
      fa = fb;
      fb = next;
    }
    CHECK(cf.depth() == 64);
    // Without the depth cap the expansion stops once q_{s+1} would pass 2^53.
    const auto deep = continued_fraction(named_constant("golden"), 1000);
    CHECK(deep.q(deep.depth()) <= (std::int64_t{1} << 53));
    CHECK(deep.q(deep.depth()) + deep.q(deep.depth() - 1) > (std::int64_t{1} << 53));
  }

  TEST_CASE("one half terminates") {
    const auto cf = continued_fraction(0.5);
    CHECK(cf.rational);
    REQUIRE(cf.depth() == 1);
    CHECK(cf.a(1) == 2);
  }

  TEST_CASE("pi minus three matches extended-precision long division") {
    const auto omega = named_constant("pi");
    const auto cf = continued_fraction(omega);
    const auto ref = oracle::partial_quotients(omega, cf.depth());
    REQUIRE(cf.depth() >= 4);
    CHECK(cf.a(1) == 7);
    CHECK(cf.a(2) == 15);
    CHECK(cf.a(3) == 1);
    CHECK(cf.a(4) == 292);
    for (int s = 1; s <= cf.depth(); ++s) CHECK(cf.a(s) == ref[static_cast<std::size_t>(s - 1)]);

    // The double is a dyadic rational: the expansion terminates and its last
    // convergent reproduces it exactly. Floating long division can only be
    // trusted before the terminal quotient.
    const double d = static_cast<double>(omega);
    const auto cfd = continued_fraction(d);
    CHECK(cfd.rational);
    const auto refd = oracle::partial_quotients(HighPrecision(d), cfd.depth());
    for (int s = 1; s < cfd.depth(); ++s) CHECK(cfd.a(s) == refd[static_cast<std::size_t>(s - 1)]);
    CHECK(mp::cpp_int(cfd.p(cfd.depth())) * (mp::cpp_int(1) << 64) == numerator64(d) * cfd.q(cfd.depth()));
  }

  TEST_CASE("rejects omega outside the open unit interval") {
    CHECK_THROWS_AS(continued_fraction(0.0), std::invalid_argument);
    CHECK_THROWS_AS(continued_fraction(1.0), std::invalid_argument);
    CHECK_THROWS_AS(continued_fraction(-0.2), std::invalid_argument);
  }

  TEST_CASE("convergent recurrences, coprimality and approximation quality") {
    auto rng = stream_for(22, 0);
    for (int trial = 0; trial < 200; ++trial) {
      const double w = uniform(rng, 1e-3, 1.0 - 1e-3);
      const auto cf = continued_fraction(w);
      const mp::cpp_int num = numerator64(w);
      const mp::cpp_int den = mp::cpp_int(1) << 64;
      for (int s = 1; s <= cf.depth(); ++s) {
        CHECK(cf.q(s) == cf.a(s) * cf.q(s - 1) + cf.q(s - 2));
        CHECK(cf.p(s) == cf.a(s) * cf.p(s - 1) + cf.p(s - 2));
        CHECK(std::gcd(cf.p(s), cf.q(s)) == 1);
        if (s < cf.depth()) {
          // |num/den - p/q| <= 1 / (q q')  <=>  |num q - p den| q' <= den
          mp::cpp_int diff = num * cf.q(s) - mp::cpp_int(cf.p(s)) * den;
          if (diff < 0) diff = -diff;
          CHECK(diff * cf.q(s + 1) <= den);
        }
      }
    }
  }

  TEST_CASE("lower bound examples on the golden mean") {
    const auto cf = continued_fraction(named_constant("golden"));
    // m = 4 < q_4 = 5: a_5 / q_5 = 1/8.
    CHECK(komega_lower_bound(cf, 4) == doctest::Approx(1.0 / 8.0));
    CHECK(torus_norm(4 * kGolden) == doctest::Approx(0.4721359549995796));
    CHECK(torus_norm(4 * kGolden) >= komega_lower_bound(cf, 4));
    // m = 1 is not below q_1 = 1, so s = 2 and the bound is a_3 / q_3.
    CHECK(komega_lower_bound(cf, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(torus_norm(kGolden) >= komega_lower_bound(cf, 1));
  }

  TEST_CASE("lower bound rejects m outside the stored range") {
    const auto cf = continued_fraction(named_constant("golden"));
    const int d = cf.depth();
    CHECK_THROWS_AS(komega_lower_bound(cf, cf.q(d)), std::out_of_range);
    CHECK_THROWS_AS(komega_lower_bound(cf, cf.q(d - 1)), std::out_of_range);
    CHECK_THROWS_AS(komega_lower_bound(cf, 0), std::out_of_range);
    CHECK_NOTHROW(komega_lower_bound(cf, cf.q(d - 1) - 1));
  }

  TEST_CASE("lower bound never exceeds the exact norm") {
    auto rng = stream_for(23, 0);
    std::size_t violations = 0;
    std::size_t checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const double w = uniform(rng, 1e-3, 1.0 - 1e-3);
      const auto cf = continued_fraction(w);
      const mp::cpp_int num = numerator64(w);
      for (int s = 1; s < cf.depth() && cf.q(s) <= 100000; ++s) {
        for (std::int64_t m = std::max<std::int64_t>(1, cf.q(s - 1)); m < cf.q(s); ++m) {
          ++checked;
          if (!norm_at_least(num, m, cf.a(s + 1), cf.q(s + 1))) ++violations;
          CHECK(komega_lower_bound(cf, m) == static_cast<double>(cf.a(s + 1)) / static_cast<double>(cf.q(s + 1)));
        }
      }
    }
    CHECK(checked > 1000);
    CHECK(violations == 0);
  }

  TEST_CASE("bracketing scale") {
    const auto cf = continued_fraction(named_constant("golden"));
    CHECK(bracketing_scale(cf, 1) == 2);  // q_1 = 1 <= 1 < q_2 = 2
    CHECK(bracketing_scale(cf, 100) == 11);  // q_10 = 89 <= 100 < q_11 = 144
  }

  TEST_CASE("lattice minima") {
    auto golden = min_komega(Frequency::one(kGolden), 5);
    CHECK(golden.k[0] == 5);
    CHECK(golden.value == doctest::Approx(oracle::nearest_int_distance(5.0L * kGolden)).epsilon(1e-12));
    CHECK(golden.value == doctest::Approx(0.09017).epsilon(1e-4));

    auto half = min_komega(Frequency::one(0.5), 2);
    CHECK(half.k[0] == 2);
    CHECK(half.value == 0.0);

    auto pair = min_komega(Frequency::two(0.5, 0.5), 1);
    CHECK(pair.k == std::array<std::int64_t, 2>{1, 1});
    CHECK(pair.value == 0.0);
  }

  TEST_CASE("lattice minimum agrees with brute force in two dimensions") {
    auto rng = stream_for(24, 0);
    for (int trial = 0; trial < 30; ++trial) {
      const double w1 = uniform01(rng), w2 = uniform01(rng);
      const auto n = uniform_int(rng, 1, 15);
      double best = 1.0;
      for (std::int64_t k1 = -n; k1 <= n; ++k1)
        for (std::int64_t k2 = -n; k2 <= n; ++k2)
          if (k1 || k2) best = std::min(best, oracle::nearest_int_distance(static_cast<long double>(k1) * w1 + static_cast<long double>(k2) * w2));
      CHECK(min_komega(Frequency::two(w1, w2), n).value == doctest::Approx(best).epsilon(1e-9));
    }
  }

  TEST_CASE("one third fails the finite-range condition at k = 3") {
    ClassifyParams p;
    p.c = 0.5;
    p.eps = 0.5;
    p.N = 10;
    p.full_cutoff = 100;
    const auto cls = classify_frequency(Frequency::one(1.0 / 3.0), p);
    REQUIRE(cls.in_T_ceN.has_value());
    CHECK_FALSE(cls.in_T_ceN->holds);
    REQUIRE(cls.in_T_ceN->witness.has_value());
    CHECK(cls.in_T_ceN->witness->k[0] == 3);
    CHECK(cls.in_T_ceN->witness->norm <= 1e-15);
  }

  TEST_CASE("golden mean passes the finite-range condition") {
    ClassifyParams p;
    p.c = 0.2;
    p.eps = 0.2;
    p.N = 100;
    const auto cls = classify_frequency(Frequency::one(kGolden), p);
    CHECK(cls.in_T_ceN->holds);
    CHECK_FALSE(cls.in_T_ceN->witness.has_value());
    CHECK(cls.dioph_full.checked_up_to == 100000);
  }

  TEST_CASE("golden and its square sum to one") {
    ClassifyParams p;
    p.N = 50;
    p.gamma1 = 0.3;
    p.gamma2 = 0.3;
    const auto w = Frequency::two(static_cast<double>(named_constant("golden")),
                                  static_cast<double>(named_constant("golden2")));
    const auto cls = classify_frequency(w, p);
    CHECK_FALSE(cls.in_T_ceN.has_value());
    CHECK_FALSE(cls.dioph_window.holds);
    REQUIRE(cls.dioph_window.witness.has_value());
    CHECK(cls.dioph_window.witness->k == std::array<std::int64_t, 2>{1, 1});
    CHECK(cls.dioph_window.witness->norm < 1e-15);
    CHECK(cls.dioph_window.checked_up_to == 3);
    CHECK_FALSE(cls.dioph_full.holds);
  }

  TEST_CASE("witnesses violate their inequality") {
    auto rng = stream_for(25, 0);
    ClassifyParams p;
    p.N = 60;
    p.full_cutoff = 200;
    for (int trial = 0; trial < 200; ++trial) {
      const auto w = trial % 2 ? Frequency::two(uniform01(rng), uniform01(rng)) : Frequency::one(uniform01(rng));
      const auto cls = classify_frequency(w, p);
      for (const FlagResult* f : {&cls.dioph_full, &cls.dioph_window}) {
        CHECK(f->holds != f->witness.has_value());
        if (f->witness) {
          const auto& k = f->witness->k;
          const long double dot = static_cast<long double>(k[0]) * w.w[0] + static_cast<long double>(k[1]) * w.w[1];
          CHECK(oracle::nearest_int_distance(dot) == doctest::Approx(f->witness->norm).epsilon(1e-9));
          CHECK(f->witness->norm <= f->witness->threshold);
        }
      }
    }
  }

  TEST_CASE("parameter validation") {
    ClassifyParams p;
    p.A = 2.0;
    CHECK_THROWS_AS(classify_frequency(Frequency::one(0.3), p), std::invalid_argument);
    p = {};
    p.N = 1;
    CHECK_THROWS_AS(classify_frequency(Frequency::one(0.3), p), std::invalid_argument);
  }

  TEST_CASE("failing frequencies have a large partial quotient at the bracketing scale") {
    ClassifyParams p;
    p.c = 0.1;
    p.eps = 0.2;
    p.N = 100;
    p.full_cutoff = 10;
    const double target = std::pow(static_cast<double>(p.N), p.eps) / p.c;
    auto rng = stream_for(26, 0);
    int failing = 0;
    int tight_form = 0;
    for (int draw = 0; failing < 200 && draw < 100000; ++draw) {
      const double w = uniform(rng, 1e-3, 1.0 - 1e-3);
      const auto cls = classify_frequency(Frequency::one(w), p);
      if (cls.in_T_ceN->holds) continue;
      ++failing;
      const auto cf = continued_fraction(w);
      const auto s = bracketing_scale(cf, p.N);
      REQUIRE(s.has_value());
      const auto a = static_cast<double>(cf.a(*s));
      // Rigorous: ||q_{s-1} omega|| > 1 / (q_s + q_{s-1}) >= 1 / ((a_s + 2) N).
      CHECK(a + 2.0 > target);
      if (a + 1.0 >= target) ++tight_form;
    }
    CHECK(failing == 200);
    // The sharper a_s + 1 form is not implied by the argument above when N is
    // close to q_{s-1}; on this sample it holds throughout.
    CHECK(tight_form == failing);
  }

  TEST_CASE("bad grid scan, small one-dimensional case") {
    const auto scan = bad_grid_scan(10, 1, 0.05, 1);
    REQUIRE(scan.indices.size() == 1);
    CHECK(scan.indices[0][0] == 10);
    CHECK(scan.bound == doctest::Approx(2 * 0.05 * 10 + 1));
  }

  TEST_CASE("bad grid scan agrees with a brute-force count") {
    const std::int64_t nbar = 100, n0 = 3;
    const double mu = 0.01;
    std::size_t expected = 0;
    for (std::int64_t j = 1; j <= nbar; ++j) {
      double best = 1.0;
      for (std::int64_t k = 1; k <= n0; ++k) best = std::min(best, oracle::nearest_int_distance(static_cast<long double>(k * j) / nbar));
      if (best < mu) ++expected;
    }
    const auto scan = bad_grid_scan(nbar, n0, mu, 1);
    CHECK(scan.indices.size() == expected);
    CHECK(static_cast<double>(scan.indices.size()) <= scan.bound);
  }

  TEST_CASE("bad grid scan in two dimensions") {
    const std::int64_t nbar = 20, n0 = 2;
    const double mu = 0.02;
    std::size_t expected = 0;
    for (std::int64_t j1 = 1; j1 <= nbar; ++j1)
      for (std::int64_t j2 = 1; j2 <= nbar; ++j2) {
        bool bad = false;
        for (std::int64_t k1 = -n0; k1 <= n0; ++k1)
          for (std::int64_t k2 = -n0; k2 <= n0; ++k2)
            if ((k1 || k2) && oracle::nearest_int_distance(static_cast<long double>(k1 * j1 + k2 * j2) / nbar) < mu) bad = true;
        if (bad) ++expected;
      }
    const auto scan = bad_grid_scan(nbar, n0, mu, 2);
    CHECK(scan.indices.size() == expected);
    const double main_term = mu * n0 * n0 * nbar * nbar;
    CHECK(scan.measured_constant == doctest::Approx((static_cast<double>(expected) - main_term) / (n0 * n0 * n0 * nbar)));
    MESSAGE("|J| = " << expected << ", measured C = " << scan.measured_constant);
  }

  TEST_CASE("frequencies near a good grid point stay away from resonance") {
    auto rng = stream_for(27, 0);
    const std::int64_t nbar = 50, n0 = 3;
    const double mu = 0.04;
    for (int dim : {1, 2}) {
      const auto scan = bad_grid_scan(nbar, n0, mu, dim);
      std::set<std::array<std::int64_t, 2>> bad(scan.indices.begin(), scan.indices.end());
      int tested = 0;
      for (std::int64_t j1 = 1; j1 <= nbar && tested < 40; ++j1) {
        for (std::int64_t j2 = (dim == 1 ? 0 : 1); j2 <= (dim == 1 ? 0 : nbar) && tested < 40; ++j2) {
          if (bad.count({j1, j2})) continue;
          ++tested;
          for (int i = 0; i < 100; ++i) {
            // 1-D: |d| < mu / (2 N0). 2-D: |d|_1 < mu / (2 N0), so |k . d| < mu / 2 on the box.
            const double r = mu / (2.0 * n0) * uniform(rng, -0.999, 0.999);
            const double split = uniform01(rng);
            const auto w = dim == 1 ? Frequency::one(j1 / double(nbar) + r)
                                    : Frequency::two(j1 / double(nbar) + split * r, j2 / double(nbar) + (1 - split) * (r < 0 ? r : -r));
            CHECK(min_komega(w, n0).value > mu / 2.0);
          }
        }
      }
      CHECK(tested == 40);
    }
  }

  TEST_CASE("named constants") {
    CHECK(static_cast<double>(named_constant("golden")) == doctest::Approx(kGolden));
    CHECK(static_cast<double>(named_constant("silver")) == doctest::Approx(std::sqrt(2.0) - 1.0));
    CHECK(static_cast<double>(named_constant("pi")) == doctest::Approx(M_PI - 3.0));
    CHECK_THROWS_AS(named_constant("bronze"), std::invalid_argument);
    const auto gp = golden_pair();
    CHECK(gp.dim == 2);
  }
}
