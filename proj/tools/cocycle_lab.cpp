#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cocycle/runner.hpp"
#include "cocycle/verify.hpp"

namespace fs = std::filesystem;
using namespace cocycle;

namespace {

// Fault-injected siblings built next to this executable.
std::vector<std::string> fault_siblings() {
  std::error_code ec;
  const auto self = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return {};
  std::vector<std::string> out;
  for (int k = 1; k <= 3; ++k) {
    const auto p = self.parent_path() / ("cocycle-lab-fault" + std::to_string(k));
    if (fs::exists(p)) out.push_back(p.string());
  }
  return out;
}

std::string default_out(const std::string& leaf) {
  const char* env = std::getenv(runner::kOutEnv);
  return ((env && *env) ? fs::path(env) : fs::path("cocycle-lab-out")) / leaf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cocycle-lab: quasi-periodic Schrodinger cocycle experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::optional<std::string> out;
  app.add_option("--seed", seed, "override the seed");
  app.add_option("--workers", workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  run->add_option("config", config_path, "INI or JSON config")->required();

  auto* verify_cmd = app.add_subcommand("verify", "run acceptance checks");
  std::string suite = "all";
  verify_cmd->add_option("suite", suite, "identities | statistics | all")
      ->check(CLI::IsMember({"identities", "statistics", "all"}));

  app.add_subcommand("list", "list builtin potentials and named frequencies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : runner::kExitConfig;
  }

  if (*run) {
    runner::RunOptions opt;
    opt.config_path = config_path;
    opt.seed = seed;
    opt.workers = workers;
    opt.out_dir = out;
    const auto r = runner::run(opt);
    if (r.exit_code != runner::kExitOk) {
      std::cerr << r.message << "\n";
    } else {
      std::cout << "wrote " << r.out_dir << "\n";
    }
    return r.exit_code;
  }
  if (*verify_cmd) {
    verify::Options opt;
    opt.seed = seed.value_or(1);
    opt.workers = workers;
    const std::string dir = out.value_or(default_out("verify"));
    opt.scratch_dir = (fs::path(dir) / "mutation").string();
    opt.fault_binaries = fault_siblings();
    try {
      return runner::verify_command(verify::parse_suite(suite), opt, dir, std::cout);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return runner::kExitFailure;
    }
  }
  std::cout << runner::list_builtins();
  return 0;
}
