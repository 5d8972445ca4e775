#include "cocycle/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <variant>

#include "cocycle/config.hpp"
#include "cocycle/diophantine.hpp"
#include "cocycle/ergodic_tools.hpp"
#include "cocycle/experiments.hpp"
#include "cocycle/operator_core.hpp"
#include "json.hpp"

namespace cocycle::runner {

namespace {

namespace fs = std::filesystem;
using config::ConfigError;
using config::ExperimentConfig;
using experiments::Model;
using Json = nlohmann::ordered_json;

using Cell = std::variant<double, std::int64_t, std::string, bool>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Output {
  Json summary = Json::object();
  std::vector<Table> tables;
};

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isnan(*d)) return "nan";
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

// RFC 4180: CRLF line ends, quoted fields only where needed.
std::string csv_text(const Table& t) {
  std::string out;
  for (std::size_t k = 0; k < t.columns.size(); ++k) out += (k ? "," : "") + cell_text(t.columns[k]);
  out += "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + cell_text(row[k]);
    out += "\r\n";
  }
  return out;
}

Json cell_json(const Cell& c) {
  return std::visit([](const auto& v) { return Json(v); }, c);
}

Json table_json(const Table& t) {
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    Json r = Json::object();
    for (std::size_t k = 0; k < row.size(); ++k) r[t.columns[k]] = cell_json(row[k]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

std::size_t count(const ExperimentConfig& c, const std::string& key) {
  const auto v = c.integer(key);
  if (v < 1) throw ConfigError("key '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

Model model_of(const ExperimentConfig& c) { return {c.potential(), c.dynamics(), c.real("operator.lambda")}; }

std::vector<double> energies_of(const ExperimentConfig& c) {
  return c.has("scan.e_grid") ? c.grid("scan.e_grid") : std::vector<double>{c.real("operator.energy")};
}

std::vector<std::int64_t> required_list(const ExperimentConfig& c, const std::string& key) {
  auto v = c.int_list(key);
  if (v.empty()) throw ConfigError("experiment '" + c.experiment() + "' needs '" + key + "'");
  return v;
}

Output lyapunov(const ExperimentConfig& c, const WorkerPool& pool) {
  const auto m = model_of(c);
  const auto n = c.integer("scan.N");
  const auto samples = count(c, "scan.samples");
  Output o;
  Table main{"lyapunov", {"E", "L_hat", "stderr", "raw_mean", "N", "samples"}, {}};
  Table scales{"lyapunov_scales", {"E", "ell", "mean", "stderr"}, {}};
  Json rows = Json::array();
  for (double e : energies_of(c)) {
    const auto r = experiments::lyapunov_estimate(m, e, n, samples, c.seed(), pool);
    main.rows.push_back({e, r.L_hat, r.stderr_, r.raw_mean, r.N, static_cast<std::int64_t>(r.samples)});
    for (const auto& s : r.per_scale) scales.rows.push_back({e, s.ell, s.mean, s.stderr_});
    rows.push_back({{"E", e}, {"L_hat", r.L_hat}, {"stderr", r.stderr_}, {"raw_mean", r.raw_mean}});
  }
  if (rows.size() == 1) {
    o.summary["E"] = rows[0]["E"];
    o.summary["L_hat"] = rows[0]["L_hat"];
    o.summary["stderr"] = rows[0]["stderr"];
  }
  o.summary["rows"] = rows;
  o.tables = {main, scales};
  return o;
}

Output scale_convergence(const ExperimentConfig& c, const WorkerPool& pool) {
  const auto scales = required_list(c, "scan.scales");
  const auto r = experiments::scale_convergence_scan(model_of(c), c.real("operator.energy"), scales,
                                                     count(c, "scan.samples"), c.seed(), pool);
  Output o;
  Table t{"scale_convergence", {"ell", "mean", "stderr", "gap", "envelope", "reference"}, {}};
  for (const auto& row : r.rows) t.rows.push_back({row.ell, row.mean, row.stderr_, row.gap, row.envelope, row.reference});
  o.summary["gap_fit"] = {{"slope", r.gap_fit.slope}, {"intercept", r.gap_fit.intercept}, {"r2", r.gap_fit.r2}};
  o.summary["rows"] = table_json(t);
  o.tables = {t};
  return o;
}

Output determinant_ldt(const ExperimentConfig& c, const WorkerPool& pool) {
  auto ns = c.int_list("scan.scales");
  if (ns.empty()) ns = {c.integer("scan.N")};
  const auto m = model_of(c);
  const double e = c.real("operator.energy");
  const double kappa = c.real("exponents.kappa");
  const double sigma = c.real("exponents.sigma");
  Output o;
  Table t{"ldt",
          {"N", "E", "tol", "fraction", "ci95", "low", "high", "mean_log_det", "independent_mean", "reference_measure"},
          {}};
  bool nonincreasing = true;
  double prev = 2.0;
  for (auto n : ns) {
    const auto r = experiments::determinant_ldt(m, e, n, kappa, count(c, "scan.samples"), c.seed(), pool,
                                                c.real_or_auto("exponents.tol"));
    t.rows.push_back({n, e, r.tol, r.fraction, r.ci95, r.proportion.low, r.proportion.high, r.mean_log_det,
                      r.independent_mean, std::exp(-std::pow(static_cast<double>(n), sigma))});
    nonincreasing = nonincreasing && r.fraction <= prev;
    prev = r.fraction;
  }
  o.summary["nonincreasing"] = nonincreasing;
  o.summary["rows"] = table_json(t);
  o.tables = {t};
  return o;
}

Output uniform_upper(const ExperimentConfig& c, const WorkerPool& pool) {
  const auto r = experiments::uniform_upper_check(model_of(c), c.real("operator.energy"), c.integer("scan.N"),
                                                  count(c, "scan.sample_sup"), c.seed(), c.real("exponents.kappa"), pool);
  Output o;
  Table t{"uniform_upper",
          {"sup_rate", "mean_rate", "excess", "allowance", "argmax_n", "argmax_x1", "argmax_x2"},
          {{r.sup_rate, r.mean_rate, r.excess, r.allowance, r.argmax_n, r.argmax_phase.x1, r.argmax_phase.x2}}};
  o.summary = table_json(t)[0];
  o.summary["within_allowance"] = r.excess <= r.allowance;
  o.tables = {t};
  return o;
}

Output resonance(const ExperimentConfig& c, const WorkerPool& pool) {
  experiments::ResonanceParams p;
  p.N = c.integer("scan.N");
  p.n_bar = required_list(c, "scan.n_bar");
  p.xi = c.grid("scan.xi_grid");
  if (p.xi.empty()) throw ConfigError("experiment 'resonance_scan' needs 'scan.xi_grid'");
  p.kappa = c.real("exponents.kappa");
  p.beta = c.real("exponents.beta");
  const auto fn = c.text("scan.function");
  if (fn == "raw") {
    p.function = experiments::ResonanceFunction::Raw;
  } else if (fn == "eigenvalue") {
    p.function = experiments::ResonanceFunction::Eigenvalue;
  } else {
    throw ConfigError("scan.function must be raw or eigenvalue, got '" + fn + "'");
  }
  p.ell = c.integer("scan.ell");
  p.level = static_cast<std::size_t>(std::max<std::int64_t>(0, c.integer("scan.level")));
  p.quadrature.m = count(c, "scan.quadrature");
  const auto r = experiments::resonance_scan(model_of(c), c.point("scan.x0"), p, pool);
  Output o;
  Table rows{"resonance", {"n_bar", "xi", "deviation", "flagged"}, {}};
  for (const auto& row : r.rows) rows.rows.push_back({row.n_bar, row.xi, row.deviation, row.flagged});
  Table levels{"resonance_levels", {"xi", "space_average", "flagged_fraction"}, {}};
  for (std::size_t k = 0; k < p.xi.size(); ++k)
    levels.rows.push_back({p.xi[k], r.space_average[k], r.flagged_fraction_at(p.xi[k])});
  o.summary["threshold"] = r.threshold;
  o.summary["flagged_fraction"] = r.flagged_fraction;
  o.tables = {rows, levels};
  return o;
}

Output green_decay(const ExperimentConfig& c, const WorkerPool& pool) {
  experiments::GreenDecayParams p;
  p.L0 = c.real_or_auto("exponents.L0");
  p.lyapunov_n = c.integer("scan.lyapunov_n");
  p.lyapunov_samples = count(c, "scan.lyapunov_samples");
  p.seed = c.seed();
  const auto nb = c.int_list("scan.n_bar");
  const auto r = experiments::green_decay_scan(model_of(c), c.point("scan.x0"), c.integer("scan.N"),
                                               nb.empty() ? 0 : nb.front(), energies_of(c), p, pool);
  Output o;
  Table t{"green_decay", {"E", "L0", "skipped", "max_excess", "violates"}, {}};
  for (const auto& row : r.rows) t.rows.push_back({row.E, row.L0, row.skipped, row.max_excess, row.violates});
  o.summary["skipped"] = r.skipped;
  o.summary["violating_fraction"] = r.violating_fraction;
  o.tables = {t};
  return o;
}

Output localization(const ExperimentConfig& c, const WorkerPool& pool) {
  experiments::LocalizationParams p;
  p.rho = c.real("exponents.rho");
  p.L_min = c.real("exponents.L_min");
  p.lyapunov_n = c.integer("scan.lyapunov_n");
  p.lyapunov_samples = count(c, "scan.lyapunov_samples");
  p.seed = c.seed();
  const auto r = experiments::localization_profile(model_of(c), c.point("scan.x0"), c.integer("scan.n_box"), p, pool);
  Output o;
  Table t{"localization",
          {"index", "E", "center", "half_width", "fitted_rate", "fit_r2", "L_hat", "residual", "edge_excluded",
           "localized"},
          {}};
  Table mass{"localization_mass", {"index", "width", "fraction"}, {}};
  for (std::size_t j = 0; j < r.profiles.size(); ++j) {
    const auto& pr = r.profiles[j];
    const auto idx = static_cast<std::int64_t>(j);
    t.rows.push_back({idx, pr.E, pr.center, pr.half_width, pr.fitted_rate, pr.fit_r2, pr.L_hat, pr.residual,
                      pr.edge_excluded, pr.localized});
    for (const auto& [w, f] : pr.mass_fraction) mass.rows.push_back({idx, w, f});
  }
  o.summary["n_box"] = r.n_box;
  o.summary["collar"] = r.collar;
  o.summary["counted"] = r.counted;
  o.summary["localized_fraction"] = r.localized_fraction;
  o.tables = {t, mass};
  return o;
}

Output large_disorder(const ExperimentConfig& c, const WorkerPool& pool) {
  const auto m = model_of(c);
  auto energies = c.grid("scan.e_grid");
  if (energies.empty()) {
    const double edge = std::abs(m.coupling) * m.potential.holder().sup_norm + 2.0;
    energies = experiments::linear_grid(-edge, edge, 201);
  }
  const auto r = experiments::large_disorder_check(m, c.integer("scan.N"), energies, count(c, "scan.samples"),
                                                   c.seed(), c.real("scan.lambda0"), pool);
  Output o;
  Table t{"large_disorder", {"E", "mean_rate", "stderr", "pass", "diag_gap_mean", "diag_gap_max"}, {}};
  for (const auto& row : r.rows)
    t.rows.push_back({row.E, row.mean_rate, row.stderr_, row.pass, row.diag_gap_mean, row.diag_gap_max});
  o.summary["threshold"] = r.threshold;
  o.summary["failing_fraction"] = r.failing_fraction;
  o.summary["ceiling"] = r.ceiling;
  o.tables = {t};
  return o;
}

SpectralWindow window_of(const ExperimentConfig& c) {
  const auto n = c.integer("scan.N");
  if (n < 1) throw ConfigError("scan.N must be positive");
  SpectralWindow w;
  w.a = 1;
  w.b = n;
  w.phase = c.point("scan.x0");
  w.dyn = c.dynamics();
  w.potential = c.potential();
  w.coupling = c.real("operator.lambda");
  w.energy = c.real("operator.energy");
  return w;
}

Output spectrum(const ExperimentConfig& c, const WorkerPool&) {
  const auto w = window_of(c);
  const auto d = decompose(w);
  Output o;
  Table t{"spectrum", {"j", "E_j", "residual", "converged"}, {}};
  double worst = 0.0;
  for (std::size_t j = 0; j < d.eigenvalues.size(); ++j) {
    t.rows.push_back({static_cast<std::int64_t>(j + 1), d.eigenvalues[j], d.residuals[j], static_cast<bool>(d.converged[j])});
    worst = std::max(worst, d.residuals[j]);
  }
  o.summary["N"] = w.b;
  o.summary["min"] = d.eigenvalues.front();
  o.summary["max"] = d.eigenvalues.back();
  o.summary["max_residual"] = worst;
  o.tables = {t};
  return o;
}

Output green_profile(const ExperimentConfig& c, const WorkerPool&) {
  const auto w = window_of(c);
  const GreenFunction g(w);
  if (g.denominator().sign == 0)
    throw NumericalDegeneracy("f_[1,N] vanishes at E = " + std::to_string(w.energy) + ": singular window");
  Output o;
  Table t{"green_profile", {"m", "n", "sign", "log_abs"}, {}};
  for (std::int64_t m = w.a; m <= w.b; ++m) {
    for (std::int64_t n = m; n <= w.b; ++n) {
      const auto e = g.entry(m, n);
      t.rows.push_back({m, n, static_cast<std::int64_t>(e.sign), e.log_abs});
    }
  }
  o.summary["N"] = w.b;
  o.summary["E"] = w.energy;
  o.summary["log_abs_corner"] = g.entry(w.a, w.b).log_abs;
  o.tables = {t};
  return o;
}

Output ergodic_rate(const ExperimentConfig& c, const WorkerPool& pool) {
  auto psi = c.potential();
  const double tau = c.real("exponents.tau");
  if (tau > 0.0) psi = ergodic::mollify(psi, tau).psi;
  const auto dyn = c.dynamics();
  const auto ns = required_list(c, "scan.scales");
  const auto samples = count(c, "scan.samples");
  ergodic::Quadrature q;
  q.m = count(c, "scan.quadrature");
  const double space = ergodic::tensor_average([&](TorusPoint x) { return psi(x); }, q);
  Output o;
  Table t{"ergodic_rate", {"N", "sup_gap", "mean_gap"}, {}};
  std::vector<double> lx, ly;
  for (auto n : ns) {
    const auto gaps = pool.map(samples, [&](std::size_t i) {
      return ergodic::birkhoff_vs_space(psi, dyn, experiments::sample_phase(c.seed(), i), n, space).gap;
    });
    const double sup = *std::max_element(gaps.begin(), gaps.end());
    t.rows.push_back({n, sup, compensated_mean(gaps)});
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(sup));
  }
  o.summary["space_average"] = space;
  if (ns.size() >= 2) o.summary["sup_gap_slope"] = fit_line(lx, ly).slope;
  o.tables = {t};
  return o;
}

Output level_sets(const ExperimentConfig& c, const WorkerPool& pool) {
  const auto f = c.potential();
  const auto dyn = c.dynamics();
  const auto xi = c.grid("scan.xi_grid");
  if (xi.empty()) throw ConfigError("experiment 'level_sets' needs 'scan.xi_grid'");
  const double delta = c.real("exponents.delta");
  ergodic::Quadrature q;
  q.m = count(c, "scan.quadrature");
  const auto scan = ergodic::exceptional_xi_scan(f, delta, xi, q);
  const auto n = c.integer("scan.N");
  const auto x0 = c.point("scan.x0");
  const auto reports =
      pool.map(xi.size(), [&](std::size_t k) { return ergodic::level_set_report(f, dyn, x0, n, xi[k], delta, q); });
  Output o;
  Table t{"level_sets", {"xi", "hits", "hit_fraction", "chi_average", "measure_delta", "measure_2delta", "bound", "exceptional"},
          {}};
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const auto& r = reports[k];
    const bool exc = std::find(scan.xi.begin(), scan.xi.end(), xi[k]) != scan.xi.end();
    t.rows.push_back({xi[k], r.hits, static_cast<double>(r.hits) / static_cast<double>(n), r.chi_average,
                      r.measure_delta, r.measure_2delta, r.bound, exc});
  }
  o.summary["exceptional_fraction"] = scan.exceptional_fraction;
  o.summary["exceptional_measure"] = scan.exceptional_measure;
  o.tables = {t};
  return o;
}

using Handler = std::function<Output(const ExperimentConfig&, const WorkerPool&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"determinant_ldt", determinant_ldt}, {"ergodic_rate", ergodic_rate},   {"green_decay", green_decay},
      {"green_profile", green_profile},     {"large_disorder", large_disorder}, {"level_sets", level_sets},
      {"localization", localization},       {"lyapunov", lyapunov},           {"resonance_scan", resonance},
      {"scale_convergence", scale_convergence}, {"spectrum", spectrum},       {"uniform_upper", uniform_upper},
  };
  return h;
}

fs::path default_root() {
  const char* env = std::getenv(kOutEnv);
  return env && *env ? fs::path(env) : fs::path("cocycle-lab-out");
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& [name, h] : handlers()) out.push_back(name);
  return out;
}

RunResult run(const RunOptions& opt) {
  RunResult res;
  fs::path out = opt.out_dir ? fs::path(*opt.out_dir) : default_root();
  auto fail = [&](int code, const std::string& msg) {
    res.exit_code = code;
    res.message = msg;
    res.out_dir = out.string();
    try {
      fs::create_directories(out);
      write_file(out / "error.txt", msg + "\n");
    } catch (...) {
      // Nowhere to record it; the caller still gets the message.
    }
    return res;
  };
  try {
    auto cfg = ExperimentConfig::load(opt.config_path);
    if (opt.seed) cfg.set("seed", std::to_string(*opt.seed));
    if (!opt.out_dir) out = cfg.has("output.dir") ? fs::path(cfg.text("output.dir")) : default_root() / cfg.experiment();
    const auto it = handlers().find(cfg.experiment());
    if (it == handlers().end()) throw ConfigError("unknown experiment '" + cfg.experiment() + "'");
    const auto formats = cfg.string_list("output.formats");
    for (const auto& f : formats)
      if (f != "csv" && f != "json") throw ConfigError("output.formats: unknown format '" + f + "'");
    const bool csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
    const bool json = std::find(formats.begin(), formats.end(), "json") != formats.end();

    const WorkerPool pool(opt.workers);
    auto result = it->second(cfg, pool);

    fs::create_directories(out);
    fs::remove(out / "error.txt");
    write_file(out / "resolved_config.ini", cfg.resolved_ini());
    Json summary = Json::object();
    summary["experiment"] = cfg.experiment();
    summary["seed"] = cfg.seed();
    summary.update(result.summary);
    Json tables = Json::array();
    for (const auto& t : result.tables) {
      tables.push_back(t.name);
      if (csv) write_file(out / (t.name + ".csv"), csv_text(t));
      if (json) write_file(out / (t.name + ".json"), table_json(t).dump(2) + "\n");
    }
    summary["tables"] = tables;
    write_file(out / "summary.json", summary.dump(2) + "\n");
    res.out_dir = out.string();
    return res;
  } catch (const ConfigError& e) {
    return fail(kExitConfig, std::string("config error: ") + e.what());
  } catch (const NumericalDegeneracy& e) {
    return fail(kExitDegenerate, std::string("numerical degeneracy: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitConfig, std::string("invalid parameter: ") + e.what());
  } catch (const std::out_of_range& e) {
    return fail(kExitConfig, std::string("parameter out of range: ") + e.what());
  } catch (const std::exception& e) {
    return fail(kExitFailure, std::string("error: ") + e.what());
  }
}

std::string list_builtins() {
  std::ostringstream os;
  char buf[256];
  os << "potentials\n";
  std::snprintf(buf, sizeof buf, "%-20s %-6s %-10s %-10s %-10s %s\n", "name", "alpha", "B0", "B_alpha", "B1",
                "definition");
  os << buf;
  for (const auto& b : builtin_catalog()) {
    const std::string alpha = b.alpha == "param" ? "alpha" : b.alpha;
    std::snprintf(buf, sizeof buf, "%-20s %-6s %-10.6g %-10.6g %-10.6g %s\n", b.name.c_str(), alpha.c_str(),
                  b.holder.sup_norm, b.holder.holder_constant, b.holder.grad_bound, b.description.c_str());
    os << buf;
  }
  os << "  (weierstrass metadata shown at alpha = 0.5)\n";
  os << "\nfrequencies\n";
  for (const auto& name : diophantine::named_constants()) {
    const auto cf = diophantine::continued_fraction(diophantine::named_constant(name), 8);
    std::snprintf(buf, sizeof buf, "%-8s %.17g  convergents:", name.c_str(), cf.omega);
    os << buf;
    for (int s = 1; s <= cf.depth(); ++s) os << " " << cf.p(s) << "/" << cf.q(s);
    os << "\n";
  }
  const auto gp = diophantine::golden_pair();
  std::snprintf(buf, sizeof buf, "%-8s (%.17g, %.17g)  shift pair (golden, silver)\n", "pair", gp.w[0], gp.w[1]);
  os << buf;
  return os.str();
}

int verify_command(verify::Suite suite, const verify::Options& opt, const std::string& out_dir, std::ostream& os) {
  const auto results = verify::run_suite(suite, opt);
  std::string report;
  bool ok = true;
  for (const auto& r : results) {
    report += verify::report_line(r) + "\n";
    ok = ok && r.pass();
  }
  os << report << (ok ? "all checks passed" : "FAILED") << "\n";
  const auto name = verify::suite_name(suite);
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / ("verify-" + name + ".txt"), report);
  write_file(fs::path(out_dir) / ("verify-" + name + ".xml"), verify::junit_xml(name, results));
  return ok ? kExitOk : kExitFailure;
}

}  // namespace cocycle::runner
