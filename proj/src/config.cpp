#include "cocycle/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "cocycle/diophantine.hpp"

namespace cocycle::config {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

// Shortest text that reads back to the same double.
std::string real_text(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_real(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(v))
    throw ConfigError("key '" + key + "': expected a real number, got '" + s + "'");
  return v;
}

std::int64_t to_int(const std::string& key, const std::string& s) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end)
    throw ConfigError("key '" + key + "': expected an integer, got '" + s + "'");
  return v;
}

const KeySpec& spec_for(const std::string& key) {
  const auto& s = schema();
  const auto it = std::find_if(s.begin(), s.end(), [&](const KeySpec& k) { return k.key == key; });
  if (it == s.end()) throw ConfigError("unknown key '" + key + "'");
  return *it;
}

// Validates and rewrites a raw value into canonical form.
std::string canonical(const KeySpec& spec, const std::string& raw) {
  const std::string v = trim(raw);
  switch (spec.type) {
    case ValueType::String:
      return v;
    case ValueType::Integer:
      return std::to_string(to_int(spec.key, v));
    case ValueType::Real:
      return real_text(to_real(spec.key, v));
    case ValueType::RealOrAuto:
      return v == "auto" ? v : real_text(to_real(spec.key, v));
    case ValueType::IntList: {
      std::string out;
      for (const auto& item : split(v, ',')) out += (out.empty() ? "" : ",") + std::to_string(to_int(spec.key, item));
      if (out.empty()) throw ConfigError("key '" + spec.key + "': empty list");
      return out;
    }
    case ValueType::StringList: {
      std::string out;
      for (const auto& item : split(v, ',')) {
        if (item.empty()) throw ConfigError("key '" + spec.key + "': empty list entry");
        out += (out.empty() ? "" : ",") + item;
      }
      return out;
    }
    case ValueType::Grid: {
      const auto parts = split(v, ':');
      if (parts.size() != 3) throw ConfigError("key '" + spec.key + "': expected min:max:count, got '" + v + "'");
      const double lo = to_real(spec.key, parts[0]);
      const double hi = to_real(spec.key, parts[1]);
      const auto n = to_int(spec.key, parts[2]);
      if (n < 1 || hi < lo || (n == 1 && hi != lo))
        throw ConfigError("key '" + spec.key + "': need min <= max and count >= 1 (count 1 only when min = max)");
      return real_text(lo) + ":" + real_text(hi) + ":" + std::to_string(n);
    }
    case ValueType::Point: {
      const auto parts = split(v, ',');
      if (parts.size() != 2) throw ConfigError("key '" + spec.key + "': expected x1,x2");
      return real_text(to_real(spec.key, parts[0])) + "," + real_text(to_real(spec.key, parts[1]));
    }
  }
  return v;
}

std::string json_scalar(const std::string& key, const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return real_text(v.get<double>());
  throw ConfigError("key '" + key + "': expected a string or number");
}

}  // namespace

const std::vector<KeySpec>& schema() {
  using T = ValueType;
  static const std::vector<KeySpec> s{
      {"experiment", T::String, "", "experiment name (see README)"},
      {"seed", T::Integer, "1", "base seed for every sampled phase"},
      {"potential.name", T::String, "cos1", "builtin spec, or 'grid' with grid_file"},
      {"potential.grid_file", T::String, "", "grid CSV path for name = grid"},
      {"potential.alpha", T::Real, "1", "Hölder exponent declared for grid potentials"},
      {"dynamics.kind", T::String, "skew_shift", "shift | skew_shift"},
      {"dynamics.omega", T::String, "golden", "skew-shift frequency"},
      {"dynamics.omega1", T::String, "golden", "shift frequency, first component"},
      {"dynamics.omega2", T::String, "silver", "shift frequency, second component"},
      {"operator.lambda", T::Real, "1", "coupling"},
      {"operator.energy", T::Real, "0", "energy for single-energy experiments"},
      {"scan.N", T::Integer, "200", "window length"},
      {"scan.samples", T::Integer, "100", "phase samples"},
      {"scan.scales", T::IntList, "", "list of lengths"},
      {"scan.n_bar", T::IntList, "", "orbit shifts"},
      {"scan.e_grid", T::Grid, "", "energy grid min:max:count"},
      {"scan.xi_grid", T::Grid, "", "level grid min:max:count"},
      {"scan.x0", T::Point, "0.1,0.2", "base phase"},
      {"scan.n_box", T::Integer, "300", "localization box half-length"},
      {"scan.sample_sup", T::Integer, "1000", "phases for the uniform upper bound"},
      {"scan.lambda0", T::Real, "20", "smallest coupling accepted by large_disorder"},
      {"scan.function", T::String, "raw", "resonance function: raw | eigenvalue"},
      {"scan.ell", T::Integer, "0", "eigenvalue-function window, 0 = ceil(N^0.2)"},
      {"scan.level", T::Integer, "0", "eigenvalue index of the resonance function"},
      {"scan.quadrature", T::Integer, "1024", "quadrature nodes per axis"},
      {"scan.lyapunov_n", T::Integer, "200", "length used for auxiliary Lyapunov estimates"},
      {"scan.lyapunov_samples", T::Integer, "16", "phases used for auxiliary Lyapunov estimates"},
      {"exponents.kappa", T::Real, "0.2", "deviation exponent"},
      {"exponents.beta", T::Real, "0.5", "upper orbit-shift exponent"},
      {"exponents.sigma", T::Real, "0.1", "reference measure exp(-N^sigma) in determinant_ldt"},
      {"exponents.delta", T::Real, "0.01", "level-set width"},
      {"exponents.tau", T::Real, "0", "mollifier width for ergodic_rate, 0 = none"},
      {"exponents.L0", T::RealOrAuto, "auto", "Green decay rate, auto = L_hat / 2"},
      {"exponents.tol", T::RealOrAuto, "auto", "determinant_ldt tolerance, auto = N^(1 - kappa)"},
      {"exponents.rho", T::Real, "0.5", "localization rate fraction"},
      {"exponents.L_min", T::Real, "0.01", "smallest L_hat counted as positive"},
      {"output.dir", T::String, "", "output directory"},
      {"output.formats", T::StringList, "csv,json", "csv and/or json"},
  };
  return s;
}

std::vector<double> parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw ConfigError("grid '" + text + "': expected min:max:count");
  const double lo = to_real("grid", parts[0]);
  const double hi = to_real("grid", parts[1]);
  const auto n = to_int("grid", parts[2]);
  if (n < 1) throw ConfigError("grid '" + text + "': count must be positive");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] =
        n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  if (n > 1) out.back() = hi;
  return out;
}

double parse_frequency(const std::string& text) {
  const std::string t = trim(text);
  const auto names = diophantine::named_constants();
  if (std::find(names.begin(), names.end(), t) != names.end())
    return static_cast<double>(diophantine::named_constant(t));
  const double v = to_real("frequency", t);
  if (!(v > 0.0 && v < 1.0)) throw ConfigError("frequency '" + t + "' must lie in (0, 1)");
  return v;
}

ExperimentConfig ExperimentConfig::from_raw(const std::map<std::string, std::string>& raw) {
  ExperimentConfig c;
  for (const auto& [key, value] : raw) c.set(key, value);
  for (const auto& k : schema()) {
    if (!c.values_.count(k.key) && !k.fallback.empty()) c.values_[k.key] = k.fallback;
  }
  if (!c.has("experiment") || c.text("experiment").empty()) throw ConfigError("missing key 'experiment'");
  return c;
}

ExperimentConfig ExperimentConfig::parse_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("INI syntax: ") + e.what());
  }
  std::map<std::string, std::string> raw;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      raw[name] = node.data();
      continue;
    }
    for (const auto& [key, leaf] : node) raw[name + "." + key] = leaf.data();
  }
  return from_raw(raw);
}

ExperimentConfig ExperimentConfig::parse_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("JSON syntax: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("JSON config must be an object");
  std::map<std::string, std::string> raw;
  auto flatten = [&](const std::string& key, const nlohmann::json& v) {
    if (v.is_array()) {
      std::string joined;
      for (const auto& item : v) joined += (joined.empty() ? "" : ",") + json_scalar(key, item);
      raw[key] = joined;
    } else {
      raw[key] = json_scalar(key, v);
    }
  };
  for (const auto& [name, node] : doc.items()) {
    if (node.is_object()) {
      for (const auto& [key, leaf] : node.items()) flatten(name + "." + key, leaf);
    } else {
      flatten(name, node);
    }
  }
  return from_raw(raw);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool json = (path.size() >= 5 && path.substr(path.size() - 5) == ".json") ||
                    (first != std::string::npos && text[first] == '{');
  return json ? parse_json(text) : parse_ini(text);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto& spec = spec_for(key);
  if (spec.type == ValueType::String || spec.type == ValueType::StringList) {
    if (trim(value).empty() && !spec.fallback.empty()) throw ConfigError("key '" + key + "': empty value");
  }
  values_[key] = canonical(spec, value);
}

bool ExperimentConfig::has(const std::string& key) const {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string ExperimentConfig::text(const std::string& key) const {
  spec_for(key);
  const auto it = values_.find(key);
  return it == values_.end() ? std::string() : it->second;
}

std::int64_t ExperimentConfig::integer(const std::string& key) const { return to_int(key, text(key)); }

double ExperimentConfig::real(const std::string& key) const { return to_real(key, text(key)); }

std::optional<double> ExperimentConfig::real_or_auto(const std::string& key) const {
  const auto t = text(key);
  if (t == "auto") return std::nullopt;
  return to_real(key, t);
}

std::vector<std::int64_t> ExperimentConfig::int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  if (!has(key)) return out;
  for (const auto& item : split(text(key), ',')) out.push_back(to_int(key, item));
  return out;
}

std::vector<std::string> ExperimentConfig::string_list(const std::string& key) const {
  return has(key) ? split(text(key), ',') : std::vector<std::string>{};
}

std::vector<double> ExperimentConfig::grid(const std::string& key) const {
  if (!has(key)) return {};
  return parse_grid(text(key));
}

TorusPoint ExperimentConfig::point(const std::string& key) const {
  const auto parts = split(text(key), ',');
  return TorusPoint::wrapped(to_real(key, parts.at(0)), to_real(key, parts.at(1)));
}

Potential ExperimentConfig::potential() const {
  const auto name = text("potential.name");
  if (name == "grid") {
    if (!has("potential.grid_file")) throw ConfigError("potential.name = grid needs potential.grid_file");
    try {
      return load_grid_csv(text("potential.grid_file"), real("potential.alpha"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("potential.grid_file: ") + e.what());
    }
  }
  try {
    return Potential::builtin(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("potential.name: ") + e.what());
  }
}

Dynamics ExperimentConfig::dynamics() const {
  const auto kind = text("dynamics.kind");
  if (kind == "skew_shift") return Dynamics::skew_shift(parse_frequency(text("dynamics.omega")));
  if (kind == "shift")
    return Dynamics::shift(parse_frequency(text("dynamics.omega1")), parse_frequency(text("dynamics.omega2")));
  throw ConfigError("dynamics.kind must be shift or skew_shift, got '" + kind + "'");
}

std::string ExperimentConfig::resolved_ini() const {
  std::ostringstream os;
  std::string section;
  for (const auto& k : schema()) {
    if (!has(k.key)) continue;
    const auto dot = k.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : k.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? k.key : k.key.substr(dot + 1);
    if (sec != section) {
      os << "\n[" << sec << "]\n";
      section = sec;
    }
    os << name << " = " << values_.at(k.key) << "\n";
  }
  return os.str();
}

}  // namespace cocycle::config
