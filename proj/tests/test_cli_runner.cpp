#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cocycle/config.hpp"
#include "cocycle/runner.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cocycle;
using config::ConfigError;
using config::ExperimentConfig;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "cocycle-cli-tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

runner::RunResult run_at(const fs::path& cfg, const fs::path& out, unsigned workers = 1) {
  runner::RunOptions opt;
  opt.config_path = cfg.string();
  opt.out_dir = out.string();
  opt.workers = workers;
  return runner::run(opt);
}

const char* kFree = R"(experiment = lyapunov
seed = 1

[potential]
name = constant(0)

[operator]
energy = 3

[scan]
N = 1000
samples = 10
)";

const char* kWobbly = R"(experiment = lyapunov
seed = 5
[potential]
name = cos2d
[operator]
lambda = 3
[scan]
N = 200
samples = 40
e_grid = -4:4:9
)";

}  // namespace

TEST_SUITE("cli_runner") {
  TEST_CASE("INI parsing fills defaults and canonicalizes values") {
    const auto c = ExperimentConfig::parse_ini(kFree);
    CHECK(c.experiment() == "lyapunov");
    CHECK(c.seed() == 1);
    CHECK(c.real("operator.energy") == 3.0);
    CHECK(c.real("operator.lambda") == 1.0);
    CHECK(c.integer("scan.N") == 1000);
    CHECK(c.text("dynamics.kind") == "skew_shift");
    CHECK_FALSE(c.has("scan.e_grid"));
    CHECK(c.potential().is_constant());
    CHECK(c.dynamics().omega1() == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-16));
  }

  TEST_CASE("unknown and malformed keys are rejected") {
    auto message = [](const std::string& text) {
      try {
        ExperimentConfig::parse_ini(text);
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("experiment = lyapunov\n[operator]\nlamda = 2\n").find("'operator.lamda'") != std::string::npos);
    CHECK(message("experiment = lyapunov\nsed = 2\n").find("'sed'") != std::string::npos);
    CHECK(message("experiment = lyapunov\n[scna]\nN = 2\n").find("'scna.N'") != std::string::npos);
    CHECK(message("experiment = lyapunov\n[scan]\nN = 2.5\n").find("scan.N") != std::string::npos);
    CHECK(message("experiment = lyapunov\n[operator]\nlambda = big\n").find("operator.lambda") != std::string::npos);
    CHECK(message("experiment = lyapunov\n[scan]\ne_grid = 1:0:3\n").find("scan.e_grid") != std::string::npos);
    CHECK(message("experiment = lyapunov\n[scan]\nN = 1\nN = 2\n").find("duplicate") != std::string::npos);
    CHECK(message("[scan]\nN = 1\n").find("experiment") != std::string::npos);
    CHECK_THROWS_AS(ExperimentConfig::parse_json("{\"experiment\": \"lyapunov\", \"operator\": {\"lamda\": 1}}"),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse_json("{\"experiment\": \"lyapunov\", \"seed\": true}"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse_json("[1, 2]"), ConfigError);
  }

  TEST_CASE("JSON and INI describe the same configuration") {
    const auto ini = ExperimentConfig::parse_ini(
        "experiment = resonance_scan\n[dynamics]\nkind = shift\n[scan]\nn_bar = 100000, 1000000\nxi_grid = -1:1:5\n"
        "x0 = 0.1,0.2\n[exponents]\nkappa = 0.25\n");
    const auto json = ExperimentConfig::parse_json(
        R"({"experiment": "resonance_scan", "dynamics": {"kind": "shift"},
            "scan": {"n_bar": [100000, 1000000], "xi_grid": "-1:1:5", "x0": [0.1, 0.2]},
            "exponents": {"kappa": 0.25}})");
    CHECK(ini.resolved_ini() == json.resolved_ini());
    CHECK(ini.int_list("scan.n_bar") == std::vector<std::int64_t>{100000, 1000000});
    const auto g = ini.grid("scan.xi_grid");
    REQUIRE(g.size() == 5);
    CHECK(g[2] == 0.0);
    CHECK(g.back() == 1.0);
  }

  TEST_CASE("resolved config round-trips") {
    const auto c = ExperimentConfig::parse_ini(kWobbly);
    const auto again = ExperimentConfig::parse_ini(c.resolved_ini());
    CHECK(again.resolved_ini() == c.resolved_ini());
    CHECK(again.real("operator.lambda") == 3.0);
    auto tricky = ExperimentConfig::parse_ini("experiment = lyapunov\n[operator]\nenergy = 0.1\n");
    CHECK(ExperimentConfig::parse_ini(tricky.resolved_ini()).real("operator.energy") == 0.1);
  }

  TEST_CASE("frequencies") {
    CHECK(config::parse_frequency("golden") == doctest::Approx(0.6180339887498949).epsilon(1e-16));
    CHECK(config::parse_frequency("0.25") == 0.25);
    CHECK_THROWS_AS(config::parse_frequency("1.5"), ConfigError);
    CHECK_THROWS_AS(config::parse_frequency("bronze"), ConfigError);
  }

  TEST_CASE("free-operator run reports L_hat at E = 3") {
    const auto dir = scratch("free");
    const auto r = run_at(write(dir / "free.ini", kFree), dir / "out");
    REQUIRE(r.exit_code == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(summary["L_hat"].get<double>() == doctest::Approx(0.9624).epsilon(1e-4));
    CHECK(summary["E"].get<double>() == 3.0);
    CHECK(fs::exists(dir / "out" / "lyapunov.csv"));
    CHECK(fs::exists(dir / "out" / "resolved_config.ini"));
    CHECK_FALSE(fs::exists(dir / "out" / "error.txt"));
  }

  TEST_CASE("CSV layout") {
    const auto dir = scratch("csv");
    REQUIRE(run_at(write(dir / "c.ini", kWobbly), dir / "out").exit_code == 0);
    const auto text = slurp(dir / "out" / "lyapunov.csv");
    CHECK(text.rfind("E,L_hat,stderr,raw_mean,N,samples\r\n", 0) == 0);
    std::size_t lines = 0;
    for (std::size_t p = text.find("\r\n"); p != std::string::npos; p = text.find("\r\n", p + 2)) ++lines;
    CHECK(lines == 10);
    // Reals carry 17 significant digits and read back exactly.
    const auto second = text.substr(text.find("\r\n") + 2);
    const auto first_field_end = second.find(',');
    const auto lhat = second.substr(first_field_end + 1, second.find(',', first_field_end + 1) - first_field_end - 1);
    const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(std::stod(lhat) == summary["rows"][0]["L_hat"].get<double>());
  }

  TEST_CASE("config errors exit 2 and name the key") {
    const auto dir = scratch("bad");
    const auto r = run_at(write(dir / "bad.ini", "experiment = lyapunov\n[operator]\nlamda = 2\n"), dir / "out");
    CHECK(r.exit_code == 2);
    CHECK(r.message.find("lamda") != std::string::npos);
    CHECK(slurp(dir / "out" / "error.txt").find("lamda") != std::string::npos);

    CHECK(run_at(write(dir / "exp.ini", "experiment = lyapunovv\n"), dir / "o2").exit_code == 2);
    CHECK(run_at(dir / "missing.ini", dir / "o3").exit_code == 2);
    CHECK(run_at(write(dir / "few.ini", "experiment = lyapunov\n[scan]\nsamples = 3\n"), dir / "o4").exit_code == 2);
    CHECK(run_at(write(dir / "res.ini", "experiment = resonance_scan\n[scan]\nxi_grid = 0:1:3\n"), dir / "o5").exit_code ==
          2);
  }

  TEST_CASE("singular windows exit 3") {
    const auto dir = scratch("singular");
    const auto r = run_at(write(dir / "s.ini",
                                "experiment = green_profile\n[potential]\nname = constant(0)\n[operator]\nenergy = 0\n"
                                "[scan]\nN = 1\n"),
                          dir / "out");
    CHECK(r.exit_code == 3);
    CHECK(fs::exists(dir / "out" / "error.txt"));
    // E = 0 is an eigenvalue of the free window of odd length.
    CHECK(run_at(write(dir / "t.ini",
                       "experiment = green_profile\n[potential]\nname = constant(0)\n[operator]\nenergy = 0\n[scan]\nN = 5\n"),
                 dir / "o2")
              .exit_code == 3);
  }

  TEST_CASE("reruns, worker counts and the resolved echo reproduce outputs byte for byte") {
    const auto dir = scratch("repro");
    const auto cfg = write(dir / "c.ini", kWobbly);
    REQUIRE(run_at(cfg, dir / "a", 1).exit_code == 0);
    REQUIRE(run_at(cfg, dir / "b", 1).exit_code == 0);
    REQUIRE(run_at(cfg, dir / "c", 4).exit_code == 0);
    REQUIRE(run_at(dir / "a" / "resolved_config.ini", dir / "d", 3).exit_code == 0);
    for (const char* f : {"lyapunov.csv", "lyapunov_scales.csv", "summary.json", "resolved_config.ini"}) {
      CAPTURE(f);
      const auto ref = slurp(dir / "a" / f);
      CHECK(slurp(dir / "b" / f) == ref);
      CHECK(slurp(dir / "c" / f) == ref);
      CHECK(slurp(dir / "d" / f) == ref);
    }
  }

  TEST_CASE("seed override is echoed") {
    const auto dir = scratch("seed");
    runner::RunOptions opt;
    opt.config_path = write(dir / "c.ini", kWobbly).string();
    opt.out_dir = (dir / "out").string();
    opt.seed = 11;
    REQUIRE(runner::run(opt).exit_code == 0);
    CHECK(ExperimentConfig::load((dir / "out" / "resolved_config.ini").string()).seed() == 11);
  }

  TEST_CASE("environment variable sets the default output root") {
    const auto dir = scratch("env");
    ::setenv(runner::kOutEnv, (dir / "root").string().c_str(), 1);
    runner::RunOptions opt;
    opt.config_path = write(dir / "c.ini", kFree).string();
    const auto r = runner::run(opt);
    ::unsetenv(runner::kOutEnv);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "root" / "lyapunov" / "summary.json"));
  }

  TEST_CASE("every bundled config runs") {
    const fs::path configs = fs::path(COCYCLE_SOURCE_DIR) / "configs";
    const auto dir = scratch("bundled");
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(configs)) {
      CAPTURE(entry.path().string());
      const auto r = run_at(entry.path(), dir / entry.path().filename(), 4);
      CHECK(r.exit_code == 0);
      CHECK(fs::exists(dir / entry.path().filename() / "summary.json"));
      ++seen;
    }
    CHECK(seen >= runner::experiment_names().size());
  }

  TEST_CASE("builtin listing") {
    const auto text = runner::list_builtins();
    std::istringstream is(text);
    std::string line;
    bool cos2d = false, weier = false, golden = false;
    // Golden convergents are ratios of consecutive Fibonacci numbers.
    std::string expected;
    std::int64_t f0 = 1, f1 = 1;
    for (int s = 0; s < 8; ++s) {
      expected += " " + std::to_string(f0) + "/" + std::to_string(f1);
      const auto next = f0 + f1;
      f0 = f1;
      f1 = next;
    }
    while (std::getline(is, line)) {
      std::istringstream words(line);
      std::string name, alpha;
      words >> name >> alpha;
      if (name == "cos2d") cos2d = alpha == "1";
      if (name == "weierstrass(alpha)") weier = alpha == "alpha";
      if (name == "golden") golden = line.find("convergents:" + expected) != std::string::npos;
    }
    CHECK(cos2d);
    CHECK(weier);
    CHECK(golden);
    CHECK(text == runner::list_builtins());
  }

  TEST_CASE("verify identities passes and statistics reports are reproducible") {
    const auto dir = scratch("verify");
    verify::Options opt;
    std::ostringstream sink;
    CHECK(runner::verify_command(verify::Suite::Identities, opt, (dir / "id").string(), sink) == 0);
    CHECK(slurp(dir / "id" / "verify-identities.xml").find("failures=\"0\"") != std::string::npos);

    opt.seed = 7;
    opt.workers = 2;
    std::ostringstream first, second;
    CHECK(runner::verify_command(verify::Suite::Statistics, opt, (dir / "s1").string(), first) == 0);
    opt.workers = 1;
    CHECK(runner::verify_command(verify::Suite::Statistics, opt, (dir / "s2").string(), second) == 0);
    CHECK(first.str() == second.str());
    CHECK(slurp(dir / "s1" / "verify-statistics.xml") == slurp(dir / "s2" / "verify-statistics.xml"));
    CHECK(slurp(dir / "s1" / "verify-statistics.txt") == slurp(dir / "s2" / "verify-statistics.txt"));
  }
}
