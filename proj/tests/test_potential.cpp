#include <cmath>
#include <numbers>
#include <sstream>

#include "cocycle/potential.hpp"
#include "cocycle/rng.hpp"
#include "doctest.h"

using namespace cocycle;

namespace {

std::vector<Potential> all_builtins() {
  return {Potential::constant(-1.5), Potential::cos1(),          Potential::cos2d(),
          Potential::coscos(),       Potential::weierstrass(0.5), Potential::weierstrass(0.8),
          Potential::sawtooth()};
}

double probe_sup(const Potential& f, int m) {
  double best = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) best = std::max(best, std::abs(f(static_cast<double>(i) / m, static_cast<double>(j) / m)));
  return best;
}

Potential random_grid(std::size_t m, std::uint64_t seed) {
  auto rng = stream_for(seed, 0);
  std::vector<double> v(m * m);
  for (double& x : v) x = uniform(rng, -1.0, 1.0);
  return Potential::grid(m, std::move(v), 1.0);
}

}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("closed forms") {
    CHECK(Potential::cos1()(0.25, 0.9) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(Potential::cos1()(0.5, 0.1) == doctest::Approx(-1.0));
    CHECK(Potential::cos2d()(0.0, 0.5) == doctest::Approx(0.0));
    CHECK(Potential::coscos()(0.5, 0.5) == doctest::Approx(1.0));
    CHECK(Potential::sawtooth()(0.75, 0.3) == 0.75);
    CHECK(Potential::sawtooth()(1.25, 0.3) == 0.25);
    CHECK(Potential::constant(3.0)(0.1, 0.2) == 3.0);
    const auto w = Potential::weierstrass(0.5);
    double expected = std::cos(2 * std::numbers::pi * 0.3);
    for (int j = 0; j <= 12; ++j) expected += std::pow(2.0, -0.5 * j) * std::cos(2 * std::numbers::pi * std::ldexp(0.1, j));
    CHECK(w(0.1, 0.3) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("builtin spec parsing") {
    CHECK(Potential::builtin("cos2d").kind() == PotentialKind::Cos2d);
    CHECK(Potential::builtin("weierstrass(0.5)").parameter() == 0.5);
    CHECK(Potential::builtin(" constant( 3 ) ").parameter() == 3.0);
    CHECK(Potential::builtin("x1").kind() == PotentialKind::Sawtooth);
    CHECK_THROWS_AS(Potential::builtin("cos3"), std::invalid_argument);
    CHECK_THROWS_AS(Potential::builtin("weierstrass"), std::invalid_argument);
    CHECK_THROWS_AS(Potential::builtin("weierstrass(1.5)"), std::invalid_argument);
    CHECK_THROWS_AS(Potential::builtin("constant(abc)"), std::invalid_argument);
    CHECK(Potential::builtin("weierstrass(0.5)").name() == "weierstrass(0.5)");
  }

  TEST_CASE("catalog is sorted and documents regularity") {
    const auto cat = builtin_catalog();
    REQUIRE(cat.size() == 6);
    for (std::size_t i = 1; i < cat.size(); ++i) CHECK(cat[i - 1].name < cat[i].name);
    bool saw_cos2d = false, saw_w = false;
    for (const auto& b : cat) {
      if (b.name == "cos2d") {
        saw_cos2d = true;
        CHECK(b.alpha == "1");
        CHECK(b.holder.alpha == 1.0);
      }
      if (b.name == "weierstrass(alpha)") {
        saw_w = true;
        CHECK(b.alpha == "param");
      }
    }
    CHECK(saw_cos2d);
    CHECK(saw_w);
  }

  TEST_CASE("sup norm bounds the probe grid") {
    auto pots = all_builtins();
    pots.push_back(random_grid(16, 31));
    for (const auto& f : pots) {
      CAPTURE(f.name());
      CHECK(probe_sup(f, 512) <= f.holder().sup_norm + 1e-9);
    }
  }

  TEST_CASE("dyadic Hoelder quotients respect the metadata") {
    auto pots = all_builtins();
    pots.push_back(random_grid(16, 32));
    std::vector<double> v = sample_on_grid(Potential::weierstrass(0.6), 64);
    pots.push_back(Potential::grid(64, std::move(v), 0.6));
    for (const auto& f : pots) {
      CAPTURE(f.name());
      const auto& h = f.holder();
      if (std::isinf(h.holder_constant)) continue;
      CHECK(max_holder_quotient(f, h.alpha, 3, 9, 64) <= 1.05 * h.holder_constant);
    }
  }

  TEST_CASE("weierstrass metadata") {
    const auto w = Potential::weierstrass(0.5);
    double sup = 1.0;
    for (int j = 0; j <= 12; ++j) sup += std::pow(2.0, -0.5 * j);
    CHECK(w.holder().sup_norm == doctest::Approx(sup));
    CHECK(w(0.0, 0.0) == doctest::Approx(sup));
    CHECK(std::isfinite(w.holder().grad_bound));
    CHECK(w.holder().alpha == 0.5);
    // Near the origin the quotient is close to the analytic sup.
    CHECK(max_holder_quotient(w, 0.5, 3, 12, 32) >= 0.3 * w.holder().holder_constant);
  }

  TEST_CASE("sawtooth has no finite gradient bound") {
    CHECK(std::isinf(Potential::sawtooth().holder().grad_bound));
  }

  TEST_CASE("grid interpolation") {
    std::vector<double> v{0.0, 1.0, 2.0, 3.0};  // (0,0)=0 (0,1/2)=1 (1/2,0)=2 (1/2,1/2)=3
    const auto g = Potential::grid(2, v);
    CHECK(g(0.0, 0.0) == 0.0);
    CHECK(g(0.5, 0.5) == 3.0);
    CHECK(g(0.25, 0.0) == doctest::Approx(1.0));
    CHECK(g(0.25, 0.25) == doctest::Approx(1.5));
    CHECK(g(0.75, 0.0) == doctest::Approx(1.0));  // periodic wrap back to node 0
    CHECK(g(1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(Potential::grid(3, v), std::invalid_argument);
  }

  TEST_CASE("grid samples reproduce nodes") {
    const auto f = Potential::coscos();
    const auto g = Potential::grid(32, sample_on_grid(f, 32));
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) CHECK(g(i / 32.0, j / 32.0) == doctest::Approx(f(i / 32.0, j / 32.0)).epsilon(1e-14));
    CHECK(g.grid_size() == 32);
  }

  TEST_CASE("grid csv round trip") {
    const auto g = random_grid(7, 33);
    std::stringstream ss;
    write_grid_csv(ss, g);
    const auto back = read_grid_csv(ss);
    REQUIRE(back.grid_size() == 7);
    const auto a = g.grid_values();
    const auto b = back.grid_values();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  TEST_CASE("grid csv rejects malformed input") {
    std::stringstream bad_header("x,y\n2,0,1,2\n2,1,3,4\n");
    CHECK_THROWS_AS(read_grid_csv(bad_header), std::invalid_argument);
    std::stringstream short_rows("m,row,v0,v1\n2,0,1,2\n");
    CHECK_THROWS_AS(read_grid_csv(short_rows), std::invalid_argument);
    std::stringstream bad_value("m,row,v0,v1\n2,0,1,x\n2,1,3,4\n");
    CHECK_THROWS_AS(read_grid_csv(bad_value), std::invalid_argument);
    std::stringstream ok("m,row,v0,v1\r\n2,0,1,2\r\n2,1,3,4\r\n");
    const auto g = read_grid_csv(ok);
    CHECK(g(0.5, 0.5) == 4.0);
    std::stringstream sink;
    CHECK_THROWS_AS(write_grid_csv(sink, Potential::cos1()), std::invalid_argument);
  }
}
