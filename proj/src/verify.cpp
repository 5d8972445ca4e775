#include "cocycle/verify.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cocycle/diophantine.hpp"
#include "cocycle/ergodic_tools.hpp"
#include "cocycle/experiments.hpp"
#include "cocycle/operator_core.hpp"
#include "cocycle/rng.hpp"

namespace cocycle::verify {

namespace {

using experiments::Model;

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool ok = false;
  std::string detail;
};

SpectralWindow random_window(std::mt19937_64& rng, std::int64_t n_min, std::int64_t n_max) {
  static const Potential pots[] = {Potential::cos1(), Potential::cos2d(), Potential::weierstrass(0.5),
                                   Potential::weierstrass(0.8)};
  SpectralWindow w;
  w.potential = pots[uniform_int(rng, 0, 3)];
  const auto n = uniform_int(rng, n_min, n_max);
  w.a = uniform_int(rng, -50, 50);
  w.b = w.a + n - 1;
  w.phase = {uniform01(rng), uniform01(rng)};
  w.dyn = uniform01(rng) < 0.5 ? Dynamics::skew_shift(uniform(rng, 0.05, 0.95))
                               : Dynamics::shift(uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95));
  w.coupling = uniform(rng, 0.5, 3.0);
  w.energy = uniform(rng, -w.scale(), w.scale());
  return w;
}

double spectral_distance(const SpectralWindow& w) {
  double best = std::numeric_limits<double>::infinity();
  for (double e : eigenvalues_sturm(w.onsite(), 0.0)) best = std::min(best, std::abs(e - w.energy));
  return best;
}

// C1: monodromy entries against determinants, N <= 64.
Outcome monodromy_identity(const Options& opt) {
  auto rng = stream_for(opt.seed, 101);
  double worst = 0.0;
  int sign_mismatch = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto w = random_window(rng, 3, 64);
    const auto c = monodromy_identity_check(w);
    if (!c.signs_agree) ++sign_mismatch;
    worst = std::max(worst, std::isnan(c.max_discrepancy) ? std::numeric_limits<double>::infinity() : c.max_discrepancy);
  }
  return {sign_mismatch == 0 && worst <= 1e-9,
          fmt("windows=1000 max_log_discrepancy=%.3e sign_mismatches=%d tol=1e-9", worst, sign_mismatch)};
}

// C2: log|f_N| against sum_j log|E_j - E|.
Outcome thouless(const Options& opt) {
  auto rng = stream_for(opt.seed, 102);
  double worst = 0.0;
  int done = 0;
  while (done < 1000) {
    auto w = random_window(rng, 1, 100);
    const auto c = thouless_check(w);
    if (c.distance < 1e-6) continue;
    ++done;
    worst = std::max(worst, std::isnan(c.discrepancy) ? std::numeric_limits<double>::infinity() : c.discrepancy);
  }
  return {worst <= 1e-6, fmt("windows=1000 max_discrepancy=%.3e tol=1e-6", worst)};
}

// C3: every Green entry against a pivoted direct solve.
Outcome cramer(const Options& opt) {
  auto rng = stream_for(opt.seed, 103);
  const WorkerPool pool(opt.workers);
  std::vector<SpectralWindow> windows;
  while (windows.size() < 100) {
    auto w = random_window(rng, 1, 200);
    if (spectral_distance(w) >= 1e-3) windows.push_back(std::move(w));
  }
  struct Worst {
    double rel = 0.0;
    int sign_mismatch = 0;
  };
  const auto per = pool.map(windows.size(), [&](std::size_t i) {
    const auto& w = windows[i];
    const GreenFunction g(w);
    Worst out;
    for (std::int64_t m = w.a; m <= w.b; ++m) {
      const auto col = green_oracle(w, m);
      for (std::int64_t n = w.a; n <= w.b; ++n) {
        const double u = col.values[static_cast<std::size_t>(n - w.a)];
        const auto e = g.entry(m, n);
        if (e.sign != (u > 0 ? 1 : u < 0 ? -1 : 0)) {
          ++out.sign_mismatch;
          continue;
        }
        const double rel = std::abs(std::expm1(e.log_abs - std::log(std::abs(u))));
        out.rel = std::max(out.rel, std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel);
      }
    }
    return out;
  });
  Worst total;
  for (const auto& p : per) {
    total.rel = std::max(total.rel, p.rel);
    total.sign_mismatch += p.sign_mismatch;
  }
  return {total.sign_mismatch == 0 && total.rel <= 1e-8,
          fmt("windows=100 max_rel_error=%.3e sign_mismatches=%d tol=1e-8", total.rel, total.sign_mismatch)};
}

// C4: free spectrum, interlacing and Sturm counts.
Outcome eigensolver(const Options& opt) {
  double free_err = 0.0;
  for (std::size_t n : {5u, 50u, 500u}) {
    const std::vector<double> zero(n, 0.0);
    const auto ev = eigenvalues_sturm(zero, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double exact = -2.0 * std::cos(static_cast<double>(j + 1) * M_PI / static_cast<double>(n + 1));
      free_err = std::max(free_err, std::abs(ev[j] - exact));
    }
  }
  auto rng = stream_for(opt.seed, 104);
  int interlace_fail = 0;
  int count_fail = 0;
  for (int t = 0; t < 100; ++t) {
    const auto w = random_window(rng, 2, 100);
    const auto diag = w.onsite();
    const auto ev = eigenvalues_sturm(diag, 0.0);
    const auto sub = eigenvalues_sturm(std::span<const double>(diag).first(diag.size() - 1), 0.0);
    // Bisection is accurate to O(eps ||H||) absolutely, so ulp-level ties near 0 can break either way.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * w.scale();
    for (std::size_t j = 0; j < sub.size(); ++j)
      if (!(ev[j] - slack <= sub[j] && sub[j] <= ev[j + 1] + slack)) ++interlace_fail;
    // Counts at gap midpoints and outside the spectrum.
    if (sturm_count(diag, ev.front() - 1.0) != 0 || sturm_count(diag, ev.back() + 1.0) != ev.size()) ++count_fail;
    for (std::size_t j = 0; j + 1 < ev.size(); ++j) {
      if (ev[j + 1] - ev[j] < 1e-9) continue;
      if (sturm_count(diag, 0.5 * (ev[j] + ev[j + 1])) != j + 1) ++count_fail;
    }
  }
  return {free_err <= 1e-10 && interlace_fail == 0 && count_fail == 0,
          fmt("free_max_error=%.3e tol=1e-10 interlacing_failures=%d sturm_count_failures=%d instances=100", free_err,
              interlace_fail, count_fail)};
}

// S1: products far beyond the double range must stay finite and exact in log form.
Outcome long_window_scaling(const Options&) {
  const std::int64_t n = 100000;
  const std::vector<double> d(static_cast<std::size_t>(n), 100.0);
  const double mu = (100.0 + std::sqrt(100.0 * 100.0 - 4.0)) / 2.0;
  const double exact = static_cast<double>(n + 1) * std::log(mu) - std::log(mu - 1.0 / mu);
  const auto f = determinant(d);
  const auto m = monodromy(d);
  const double det_err = std::abs(f.log_abs - exact);
  const double mono_err = std::abs(m.log_entry(0, 0).log_abs - exact);
  const bool ok = f.sign == 1 && m.log_entry(0, 0).sign == 1 && det_err <= 1e-9 * exact && mono_err <= 1e-9 * exact &&
                  std::isfinite(m.log_norm());
  return {ok, fmt("N=%lld lambda=100 log_f=%.12g closed_form=%.12g det_rel=%.3e monodromy_rel=%.3e tol=1e-9",
                  static_cast<long long>(n), f.log_abs, exact, det_err / exact, mono_err / exact)};
}

// C5: ||m omega|| >= a_{s+1} / q_{s+1} for all m < q_s <= 10^5.
Outcome continued_fraction_bound(const Options& opt) {
  std::vector<double> omegas{kGolden};
  auto rng = stream_for(opt.seed, 105);
  while (omegas.size() < 21) omegas.push_back(uniform(rng, 1e-3, 1.0 - 1e-3));
  constexpr std::int64_t kMax = 100000;
  std::int64_t violations = 0;
  std::int64_t checked = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (double w : omegas) {
    const auto cf = diophantine::continued_fraction(w);
    // Exact ||m w||: m w = p + e with e recovered by fma.
    auto norm = [w](std::int64_t m) {
      const double md = static_cast<double>(m);
      const double p = md * w;
      const double e = std::fma(md, w, -p);
      const double r = std::abs((p - std::nearbyint(p)) + e);
      return std::min(r, 1.0 - r);
    };
    double running = std::numeric_limits<double>::infinity();
    std::int64_t m = 1;
    for (int s = 1; s < cf.depth() && cf.q(s) <= kMax; ++s) {
      for (; m < cf.q(s); ++m) running = std::min(running, norm(m));
      if (cf.q(s) == 1) continue;
      const double bound = static_cast<double>(cf.a(s + 1)) / static_cast<double>(cf.q(s + 1));
      ++checked;
      tightest = std::min(tightest, running / bound);
      if (running < bound) ++violations;
    }
  }
  return {violations == 0 && checked > 0,
          fmt("frequencies=21 scales_checked=%lld violations=%lld min_ratio=%.6f", static_cast<long long>(checked),
              static_cast<long long>(violations), tightest)};
}

// C6: sup over 64 phases of the Birkhoff gap of cos(2 pi x1) cos(2 pi x2).
Outcome ergodic_rate(const Options& opt) {
  const WorkerPool pool(opt.workers);
  const auto psi = Potential::coscos();
  const double space = ergodic::tensor_average([&](TorusPoint x) { return psi(x); });
  const auto gp = diophantine::golden_pair();
  const std::vector<std::pair<std::string, Dynamics>> dyns{{"shift", Dynamics::shift(gp.w[0], gp.w[1])},
                                                           {"skew", Dynamics::skew_shift(kGolden)}};
  const std::vector<std::int64_t> ns{1000, 10000, 100000};
  bool ok = true;
  std::string detail;
  for (const auto& [name, dyn] : dyns) {
    std::vector<double> sups;
    for (auto n : ns) {
      const auto gaps = pool.map(64, [&](std::size_t i) {
        return ergodic::birkhoff_vs_space(psi, dyn, experiments::sample_phase(opt.seed + 106, i), n, space).gap;
      });
      sups.push_back(*std::max_element(gaps.begin(), gaps.end()));
    }
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < ns.size(); ++k) {
      lx.push_back(std::log(static_cast<double>(ns[k])));
      ly.push_back(std::log(sups[k]));
    }
    const double slope = fit_line(lx, ly).slope;
    const bool dec = sups[1] < sups[0] && sups[2] < sups[1];
    ok = ok && dec && slope <= -0.2;
    detail += fmt("%s: sup_gap=[%.3e,%.3e,%.3e] slope=%.3f; ", name.c_str(), sups[0], sups[1], sups[2], slope);
  }
  detail += "need strictly decreasing and slope <= -0.2";
  return {ok, detail};
}

// C7: quadratic Weyl sum at alpha = golden / 2.
Outcome weyl_sum(const Options&) {
  double worst = 0.0;
  std::string detail;
  for (std::int64_t n : {100, 1000, 10000, 100000}) {
    const auto s = ergodic::weyl_sum_quadratic(kGolden / 2.0, 0.0, n);
    const double r = std::abs(s.value) / std::pow(static_cast<double>(n), 0.75);
    worst = std::max(worst, r);
    detail += fmt("N=%lld:%.4f ", static_cast<long long>(n), r);
  }
  return {worst <= 1.0, detail + fmt("max |S|/N^0.75=%.4f tol=1", worst)};
}

// C8: large disorder, cosine, skew-shift golden, lambda = 100.
Outcome large_disorder(const Options& opt) {
  const WorkerPool pool(opt.workers);
  const Model m{Potential::cos1(), Dynamics::skew_shift(kGolden), 100.0};
  const double edge = m.coupling * m.potential.holder().sup_norm + 2.0;
  const auto grid = experiments::linear_grid(-edge, edge, 201);
  const auto rep = experiments::large_disorder_check(m, 50, grid, 1000, opt.seed, 20.0, pool);
  const double at0 = rep.rows[100].mean_rate;
  const double margin = at0 - 2.3026;
  return {rep.failing_fraction <= 0.15 && rep.rows[100].E == 0.0 && margin >= 0.3,
          fmt("failing_fraction=%.4f tol=0.15 mean_rate(E=0)=%.4f excess_over_2.3026=%.4f need>=0.3",
              rep.failing_fraction, at0, margin)};
}

// C9: localization statistics on [-300, 300].
Outcome localization(const Options& opt) {
  const WorkerPool pool(opt.workers);
  const Model m{Potential::cos1(), Dynamics::skew_shift(kGolden), 100.0};
  experiments::LocalizationParams p;
  p.seed = opt.seed;
  const auto rep = experiments::localization_profile(m, experiments::sample_phase(opt.seed, 109), 300, p, pool);
  std::size_t counted = 0;
  std::size_t good = 0;
  for (const auto& pr : rep.profiles) {
    if (pr.edge_excluded) continue;
    ++counted;
    if (pr.half_width <= 30 && pr.fitted_rate >= 0.5 * pr.L_hat / 2.0 && pr.fit_r2 >= 0.8) ++good;
  }
  const double frac = counted == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(counted);
  return {frac >= 0.9, fmt("eigenpairs=%zu counted=%zu fraction=%.4f need>=0.9", rep.profiles.size(), counted, frac)};
}

// C10: determinant deviations shrink from N = 400 to N = 1600.
Outcome ldt_shrinkage(const Options& opt) {
  const WorkerPool pool(opt.workers);
  const auto gp = diophantine::golden_pair();
  const Model m{Potential::cos1(), Dynamics::shift(gp.w[0], gp.w[1]), 2.0};
  const auto a = experiments::determinant_ldt(m, 0.7, 400, 0.2, 1000, opt.seed, pool);
  const auto b = experiments::determinant_ldt(m, 0.7, 1600, 0.2, 1000, opt.seed, pool);
  return {b.fraction <= a.fraction && a.fraction <= 0.05 && b.fraction <= 0.05,
          fmt("fraction(N=400)=%.4f fraction(N=1600)=%.4f tol=0.05 tol_N(400)=%.1f tol_N(1600)=%.1f", a.fraction,
              b.fraction, a.tol, b.tol)};
}

std::string quote_arg(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

// C11: each fault-injected build must fail `verify identities`.
Outcome mutation(const Options& opt) {
  if (opt.fault_binaries.empty()) return {false, "no fault-injected binaries supplied"};
  namespace fs = std::filesystem;
  const fs::path scratch = opt.scratch_dir.empty() ? fs::temp_directory_path() / "cocycle-mutation" : fs::path(opt.scratch_dir);
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < opt.fault_binaries.size(); ++i) {
    const auto& bin = opt.fault_binaries[i];
    const fs::path out = scratch / ("fault" + std::to_string(i + 1));
    fs::create_directories(out);
    const std::string cmd = quote_arg(bin) + " verify identities --seed " + std::to_string(opt.seed) + " --out " +
                            quote_arg(out.string()) + " > " + quote_arg((out / "stdout.txt").string()) + " 2>&1";
    const int status = std::system(cmd.c_str());
    const bool exited = status != -1 && WIFEXITED(status);
    const int code = exited ? WEXITSTATUS(status) : -1;
    // 127: the shell could not find the binary, which says nothing about the fault.
    const bool detected = exited && code != 0 && code != 127;
    ok = ok && detected;
    detail += fmt("%s exit=%d; ", fs::path(bin).filename().c_str(), code);
  }
  return {ok, detail + "need nonzero exit for every fault"};
}

struct Entry {
  const char* title;
  const char* suite;
  double budget;
  std::function<Outcome(const Options&)> fn;
};

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> r{
      {"C1", {"monodromy-determinant identity", "identities", 5.0, monodromy_identity}},
      {"C2", {"Thouless identity", "identities", 30.0, thouless}},
      {"C3", {"Cramer vs direct solve", "identities", 10.0, cramer}},
      {"C4", {"eigensolver exactness", "identities", 20.0, eigensolver}},
      {"S1", {"long-window log scaling", "identities", 5.0, long_window_scaling}},
      {"C5", {"continued-fraction lower bound", "statistics", 30.0, continued_fraction_bound}},
      {"C6", {"ergodic rate", "statistics", 60.0, ergodic_rate}},
      {"C7", {"Weyl sum", "statistics", 20.0, weyl_sum}},
      {"C8", {"large disorder", "statistics", 120.0, large_disorder}},
      {"C9", {"localization profile", "statistics", 300.0, localization}},
      {"C10", {"LDT shrinkage", "statistics", 120.0, ldt_shrinkage}},
      {"C11", {"mutation sensitivity", "mutation", 30.0, mutation}},
  };
  return r;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Suite parse_suite(const std::string& name) {
  if (name == "identities") return Suite::Identities;
  if (name == "statistics") return Suite::Statistics;
  if (name == "all") return Suite::All;
  throw std::invalid_argument("unknown suite '" + name + "' (identities, statistics, all)");
}

std::string suite_name(Suite s) {
  switch (s) {
    case Suite::Identities: return "identities";
    case Suite::Statistics: return "statistics";
    case Suite::All: return "all";
  }
  return "all";
}

std::vector<std::string> suite_checks(Suite s) {
  const std::vector<std::string> ident{"C1", "C2", "C3", "C4", "S1"};
  const std::vector<std::string> stats{"C5", "C6", "C7", "C8", "C9", "C10"};
  if (s == Suite::Identities) return ident;
  if (s == Suite::Statistics) return stats;
  auto all = ident;
  all.insert(all.end(), stats.begin(), stats.end());
  all.push_back("C11");
  return all;
}

CheckResult run_check(const std::string& id, const Options& opt) {
  const auto it = registry().find(id);
  if (it == registry().end()) throw std::invalid_argument("unknown check '" + id + "'");
  const auto& e = it->second;
  CheckResult r{id, e.title, e.suite, false, 0.0, e.budget, ""};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto out = e.fn(opt);
    r.numeric_ok = out.ok;
    r.detail = out.detail;
  } catch (const std::exception& ex) {
    r.numeric_ok = false;
    r.detail = std::string("exception: ") + ex.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CheckResult> run_suite(Suite s, const Options& opt) {
  std::vector<CheckResult> out;
  for (const auto& id : suite_checks(s)) out.push_back(run_check(id, opt));
  return out;
}

std::string report_line(const CheckResult& r) {
  std::string line = (r.pass() ? "PASS " : "FAIL ") + r.id + " " + r.title + ": " + r.detail;
  if (r.numeric_ok && !r.pass()) line += fmt(" [over the %.0f s budget]", r.budget);
  return line;
}

std::string junit_xml(const std::string& suite, const std::vector<CheckResult>& results) {
  std::size_t failures = 0;
  for (const auto& r : results) failures += r.pass() ? 0 : 1;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<testsuite name=\"" << xml_escape(suite) << "\" tests=\"" << results.size() << "\" failures=\"" << failures
     << "\">\n";
  for (const auto& r : results) {
    os << "  <testcase classname=\"" << xml_escape(r.suite) << "\" name=\"" << xml_escape(r.id + " " + r.title)
       << "\">\n";
    if (r.pass()) {
      os << "    <system-out>" << xml_escape(r.detail) << "</system-out>\n";
    } else {
      os << "    <failure message=\"" << xml_escape(report_line(r)) << "\"/>\n";
    }
    os << "  </testcase>\n";
  }
  os << "</testsuite>\n";
  return os.str();
}

}  // namespace cocycle::verify
