#include "cocycle/potential.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cocycle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kWeierstrassTerms = 13;  // j = 0..12
constexpr double kGridSafety = 1.05;

double cos_turns(double t) { return std::cos(kTwoPi * (t - std::floor(t))); }

// sup over d in (0, 1/2] of g(d) / d^alpha where g is a sum of terms
// coeff * min(2, 2 pi freq d). Between breakpoints the quotient has the form
// A d^{1-alpha} + B d^{-alpha}, so its sup is attained at a breakpoint or an end.
double sup_holder_of_cosine_sum(const std::vector<std::pair<double, double>>& terms, double alpha) {
  auto quotient = [&](double d) {
    double g = 0.0;
    for (const auto& [coeff, freq] : terms) g += coeff * std::min(2.0, kTwoPi * freq * d);
    return g / std::pow(d, alpha);
  };
  std::vector<double> points{0.5, 1e-12};
  for (const auto& [coeff, freq] : terms) {
    const double breakpoint = 1.0 / (std::numbers::pi * freq);
    if (breakpoint < 0.5) points.push_back(breakpoint);
  }
  double best = 0.0;
  for (double d : points) best = std::max(best, quotient(d));
  return best;
}

HolderData weierstrass_holder(double alpha) {
  std::vector<std::pair<double, double>> first;
  double sup = 1.0;  // cos(2 pi x2)
  double grad1 = 0.0;
  for (int j = 0; j < kWeierstrassTerms; ++j) {
    const double coeff = std::pow(2.0, -alpha * j);
    const double freq = std::pow(2.0, j);
    first.emplace_back(coeff, freq);
    sup += coeff;
    grad1 += coeff * kTwoPi * freq;
  }
  const double h1 = sup_holder_of_cosine_sum(first, alpha);
  const double h2 = sup_holder_of_cosine_sum({{1.0, 1.0}}, alpha);
  // |f(x) - f(y)| <= h1 |dx1|^alpha + h2 |dx2|^alpha <= (h1 + h2) |x - y|^alpha.
  return {alpha, h1 + h2, sup, std::hypot(grad1, kTwoPi)};
}

HolderData estimate_grid_holder(std::size_t m, const std::vector<double>& v, double alpha) {
  double sup = 0.0, d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double here = v[i * m + j];
      sup = std::max(sup, std::abs(here));
      d1 = std::max(d1, std::abs(v[((i + 1) % m) * m + j] - here));
      d2 = std::max(d2, std::abs(v[i * m + (j + 1) % m] - here));
    }
  }
  // Bilinear interpolation: each partial derivative is bounded by M times the
  // largest node difference along that axis.
  const double grad = static_cast<double>(m) * std::hypot(d1, d2);
  return {alpha, 0.0, sup, grad};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("grid csv: not a number: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("grid csv: not a number: '" + s + "'");
  return v;
}

}  // namespace

Potential Potential::constant(double c) {
  return {PotentialKind::Constant, c, HolderData{1.0, 0.0, std::abs(c), 0.0}};
}

Potential Potential::cos1() { return {PotentialKind::Cos1, 0.0, HolderData{1.0, kTwoPi, 1.0, kTwoPi}}; }

Potential Potential::cos2d() {
  const double lip = kTwoPi * std::numbers::sqrt2;
  return {PotentialKind::Cos2d, 0.0, HolderData{1.0, lip, 2.0, lip}};
}

Potential Potential::coscos() { return {PotentialKind::CosCos, 0.0, HolderData{1.0, kTwoPi, 1.0, kTwoPi}}; }

Potential Potential::weierstrass(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("weierstrass: alpha must lie in (0, 1]");
  return {PotentialKind::Weierstrass, alpha, weierstrass_holder(alpha)};
}

Potential Potential::sawtooth() {
  const double inf = std::numeric_limits<double>::infinity();
  return {PotentialKind::Sawtooth, 0.0, HolderData{1.0, inf, 1.0, inf}};
}

Potential Potential::grid(std::size_t m, std::vector<double> values, const HolderData& holder) {
  if (m < 2 || values.size() != m * m) throw std::invalid_argument("grid potential: need M >= 2 and M*M values");
  Potential p(PotentialKind::Grid, 0.0, holder);
  p.m_ = m;
  p.grid_ = std::make_shared<const std::vector<double>>(std::move(values));
  return p;
}

Potential Potential::grid(std::size_t m, std::vector<double> values, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("grid potential: alpha must lie in (0, 1]");
  if (m < 2 || values.size() != m * m) throw std::invalid_argument("grid potential: need M >= 2 and M*M values");
  HolderData holder = estimate_grid_holder(m, values, alpha);
  Potential p = grid(m, std::move(values), holder);
  if (alpha == 1.0) {
    p.holder_.holder_constant = holder.grad_bound;
  } else {
    double q = max_holder_quotient(p, alpha);
    // The grid spacing itself is the finest scale where the interpolant bends.
    const double h = 1.0 / static_cast<double>(m);
    const auto& v = *p.grid_;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double here = v[i * m + j];
        const double a = std::abs(v[((i + 1) % m) * m + j] - here);
        const double b = std::abs(v[i * m + (j + 1) % m] - here);
        q = std::max(q, std::max(a, b) / std::pow(h, alpha));
      }
    }
    p.holder_.holder_constant = kGridSafety * q;
  }
  return p;
}

Potential Potential::builtin(std::string_view spec) {
  std::string s(spec);
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  std::string name = s;
  std::string arg;
  if (const auto open = s.find('('); open != std::string::npos) {
    if (s.back() != ')') throw std::invalid_argument("malformed potential spec '" + s + "'");
    name = s.substr(0, open);
    arg = s.substr(open + 1, s.size() - open - 2);
  }
  auto numeric_arg = [&](const char* what) {
    if (arg.empty()) throw std::invalid_argument(std::string("potential '") + name + "' needs " + what);
    return parse_double(arg);
  };
  if (name == "cos1") return cos1();
  if (name == "cos2d") return cos2d();
  if (name == "coscos") return coscos();
  if (name == "x1") return sawtooth();
  if (name == "constant") return constant(numeric_arg("a value"));
  if (name == "weierstrass") return weierstrass(numeric_arg("alpha"));
  throw std::invalid_argument("unknown builtin potential '" + name + "'");
}

double Potential::operator()(double x1, double x2) const {
  switch (kind_) {
    case PotentialKind::Constant:
      return parameter_;
    case PotentialKind::Cos1:
      return cos_turns(x1);
    case PotentialKind::Cos2d:
      return cos_turns(x1) + cos_turns(x2);
    case PotentialKind::CosCos:
      return cos_turns(x1) * cos_turns(x2);
    case PotentialKind::Weierstrass: {
      double sum = cos_turns(x2);
      const double base = x1 - std::floor(x1);
      for (int j = 0; j < kWeierstrassTerms; ++j) {
        sum += std::exp2(-parameter_ * j) * cos_turns(std::ldexp(base, j));
      }
      return sum;
    }
    case PotentialKind::Sawtooth:
      return wrap_unit(x1);
    case PotentialKind::Grid: {
      const auto m = static_cast<double>(m_);
      const double u = wrap_unit(x1) * m;
      const double w = wrap_unit(x2) * m;
      const double fu = std::floor(u);
      const double fw = std::floor(w);
      const double s = u - fu;
      const double t = w - fw;
      const std::size_t i0 = static_cast<std::size_t>(fu) % m_;
      const std::size_t j0 = static_cast<std::size_t>(fw) % m_;
      const std::size_t i1 = (i0 + 1) % m_;
      const std::size_t j1 = (j0 + 1) % m_;
      const auto& v = *grid_;
      return (1 - s) * ((1 - t) * v[i0 * m_ + j0] + t * v[i0 * m_ + j1]) +
             s * ((1 - t) * v[i1 * m_ + j0] + t * v[i1 * m_ + j1]);
    }
  }
  return 0.0;
}

std::string Potential::name() const {
  std::ostringstream os;
  switch (kind_) {
    case PotentialKind::Constant:
      os << "constant(" << parameter_ << ")";
      break;
    case PotentialKind::Cos1:
      os << "cos1";
      break;
    case PotentialKind::Cos2d:
      os << "cos2d";
      break;
    case PotentialKind::CosCos:
      os << "coscos";
      break;
    case PotentialKind::Weierstrass:
      os << "weierstrass(" << parameter_ << ")";
      break;
    case PotentialKind::Sawtooth:
      os << "x1";
      break;
    case PotentialKind::Grid:
      os << "grid(" << m_ << ")";
      break;
  }
  return os.str();
}

std::size_t Potential::grid_size() const { return m_; }

std::span<const double> Potential::grid_values() const {
  if (!grid_) return {};
  return {grid_->data(), grid_->size()};
}

std::vector<BuiltinInfo> builtin_catalog() {
  std::vector<BuiltinInfo> out{
      {"constant(c)", "V = c", "1", Potential::constant(1.0).holder()},
      {"cos1", "cos(2 pi x1)", "1", Potential::cos1().holder()},
      {"cos2d", "cos(2 pi x1) + cos(2 pi x2)", "1", Potential::cos2d().holder()},
      {"coscos", "cos(2 pi x1) cos(2 pi x2)", "1", Potential::coscos().holder()},
      {"weierstrass(alpha)", "sum_{j<=12} 2^{-alpha j} cos(2 pi 2^j x1) + cos(2 pi x2)", "param",
       Potential::weierstrass(0.5).holder()},
      {"x1", "sawtooth x1 (discontinuous)", "1", Potential::sawtooth().holder()},
  };
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

double max_holder_quotient(const Potential& f, double alpha, int k_min, int k_max, std::size_t probe) {
  const double dirs[3][2] = {{1.0, 0.0}, {0.0, 1.0}, {std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2}};
  double best = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double h = std::ldexp(1.0, -k);
    const double scale = std::pow(h, alpha);
    for (std::size_t i = 0; i < probe; ++i) {
      for (std::size_t j = 0; j < probe; ++j) {
        // Irrational offsets keep probes off any lattice the potential is built on.
        const double x1 = (static_cast<double>(i) + 0.2928932) / static_cast<double>(probe);
        const double x2 = (static_cast<double>(j) + 0.6180340) / static_cast<double>(probe);
        const double here = f(x1, x2);
        for (const auto& d : dirs) {
          const double there = f(x1 + h * d[0], x2 + h * d[1]);
          best = std::max(best, std::abs(there - here) / scale);
        }
      }
    }
  }
  return best;
}

std::vector<double> sample_on_grid(const Potential& f, std::size_t m) {
  std::vector<double> v(m * m);
  const auto md = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) v[i * m + j] = f(static_cast<double>(i) / md, static_cast<double>(j) / md);
  }
  return v;
}

Potential read_grid_csv(std::istream& in, double alpha) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("grid csv: empty input");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "m" || header[1] != "row") {
    throw std::invalid_argument("grid csv: header must start with m,row");
  }
  std::size_t m = 0;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 3) throw std::invalid_argument("grid csv: short row");
    const auto this_m = static_cast<std::size_t>(parse_double(cells[0]));
    if (m == 0) {
      m = this_m;
      values.reserve(m * m);
    }
    if (this_m != m || cells.size() != m + 2) throw std::invalid_argument("grid csv: inconsistent row length");
    if (static_cast<std::size_t>(parse_double(cells[1])) != row) throw std::invalid_argument("grid csv: rows out of order");
    for (std::size_t j = 0; j < m; ++j) values.push_back(parse_double(cells[j + 2]));
    ++row;
  }
  if (row != m) throw std::invalid_argument("grid csv: expected M rows");
  return Potential::grid(m, std::move(values), alpha);
}

void write_grid_csv(std::ostream& out, const Potential& grid) {
  if (grid.kind() != PotentialKind::Grid) throw std::invalid_argument("write_grid_csv: not a grid potential");
  const std::size_t m = grid.grid_size();
  const auto v = grid.grid_values();
  out << "m,row";
  for (std::size_t j = 0; j < m; ++j) out << ",v" << j;
  out << "\r\n";
  char buf[32];
  for (std::size_t i = 0; i < m; ++i) {
    out << m << ',' << i;
    for (std::size_t j = 0; j < m; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", v[i * m + j]);
      out << ',' << buf;
    }
    out << "\r\n";
  }
}

Potential load_grid_csv(const std::string& path, double alpha) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open grid file '" + path + "'");
  return read_grid_csv(in, alpha);
}

}  // namespace cocycle
