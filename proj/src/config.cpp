#include "kasner/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kasner {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_plain(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("not a number: '" + std::string(s) + "'");
  return v;
}

long long parse_integer(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("not an integer: '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("not a boolean: '" + std::string(s) + "'");
}

std::vector<int> parse_int_list(std::string_view s) {
  std::vector<int> out;
  for (auto part : split(s, ',')) out.push_back(static_cast<int>(parse_integer(part)));
  return out;
}

Profile profile_value(std::string_view s) {
  try {
    return parse_profile(s);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
}

// 1-based index in a key segment -> 0-based.
int index_segment(std::string_view s) {
  const long long v = parse_integer(s);
  if (v < 1 || v > 11) throw ConfigError("index out of range in key: " + std::string(s));
  return static_cast<int>(v - 1);
}

void apply(RunConfig& c, std::string_view key, std::string_view val) {
  const auto seg = split(key, '.');
  if (key == "background.q") c.q = parse_number_list(val);
  else if (key == "background.B") c.B = parse_number(val);
  else if (key == "background.dim") c.search_dim = static_cast<int>(parse_integer(val));
  else if (key == "background.search") c.search = parse_bool(val);
  else if (key == "background.tol") c.background_tol = parse_number(val);
  else if (key == "grid.active_dims") c.active_dims = parse_int_list(val);
  else if (key == "grid.sizes") c.sizes = parse_int_list(val);
  else if (key == "perturb.psi") c.perturb.psi = profile_value(val);
  else if (key == "perturb.phi") c.perturb.phi = profile_value(val);
  else if (seg.size() == 3 && seg[0] == "perturb" && seg[1] == "xi")
    c.perturb.xi[index_segment(seg[2])] = profile_value(val);
  else if (seg.size() == 4 && seg[0] == "perturb" && (seg[1] == "g" || seg[1] == "k")) {
    const int i = index_segment(seg[2]), j = index_segment(seg[3]);
    if (i > j) throw ConfigError("use the upper triangle (i <= j) in " + std::string(key));
    (seg[1] == "g" ? c.perturb.g : c.perturb.k)[{i, j}] = profile_value(val);
  } else if (seg.size() == 4 && seg[0] == "perturb" && seg[1] == "scalar1d" &&
             (seg[2] == "beta" || seg[2] == "kappa")) {
    const int I = index_segment(seg[3]);
    if (I < 1) throw ConfigError("scalar1d profiles are indexed from 2: " + std::string(key));
    (seg[2] == "beta" ? c.perturb.beta : c.perturb.kappa)[I] = profile_value(val);
  } else if (key == "stability.q") c.stability_q = parse_number(val);
  else if (key == "stability.sigma") c.stability_sigma = parse_number(val);
  else if (key == "stability.mode") {
    if (val == "general") c.stability_mode = StabilityMode::general;
    else if (val == "polarized") c.stability_mode = StabilityMode::polarized_u1;
    else throw ConfigError("stability.mode must be general or polarized");
  } else if (key == "lapse.rel_tol") c.lapse.rel_tol = parse_number(val);
  else if (key == "lapse.max_iter") c.lapse.max_iter = static_cast<int>(parse_integer(val));
  else if (key == "lapse.restart") c.lapse.restart = static_cast<int>(parse_integer(val));
  else if (key == "evolve.tau_step") c.evolve.tau_step = parse_number(val);
  else if (key == "evolve.t_final") c.evolve.t_final = parse_number(val);
  else if (key == "evolve.cfl_safety") c.evolve.cfl_safety = parse_number(val);
  else if (key == "evolve.snapshot_every")
    c.evolve.snapshot_every = static_cast<int>(parse_integer(val));
  else if (key == "evolve.determinism") c.evolve.determinism = parse_bool(val);
  else if (key == "final.ratio") c.final_ratio = parse_number(val);
  else if (key == "final.count") c.final_count = static_cast<int>(parse_integer(val));
  else if (key == "diag.N0") c.diag.N0 = static_cast<int>(parse_integer(val));
  else if (key == "diag.N") c.diag.N = static_cast<int>(parse_integer(val));
  else if (key == "diag.A") c.diag.A = parse_number(val);
  else if (key == "u1.enabled") c.u1 = parse_bool(val);
  else if (key == "u1.constraint_tol") c.u1_constraint_tol = parse_number(val);
  else if (key == "output.dir") c.output_dir = std::string(val);
  else if (key == "seed") {
    const std::string_view v = trim(val);
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), c.seed);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
      throw ConfigError("not an unsigned 64-bit integer: '" + std::string(v) + "'");
  }
  else throw ConfigError("unknown key");
}

void validate(const RunConfig& c) {
  if (c.search) {
    if (c.search_dim < 3) throw ConfigError("background.dim must be >= 3 for a search");
    if (!c.q.empty()) throw ConfigError("background.q and background.search are exclusive");
    if (c.B != 0.0) throw ConfigError("the exponent search is vacuum only (B = 0)");
  } else {
    if (c.q.size() < 3) throw ConfigError("background.q needs at least 3 exponents");
    if (c.search_dim != 0 && c.search_dim != static_cast<int>(c.q.size()))
      throw ConfigError("background.dim does not match background.q");
  }
  if (c.B < 0.0) throw ConfigError("background.B must be >= 0");
  const int D = c.search ? c.search_dim : static_cast<int>(c.q.size());
  if (c.active_dims.empty() || c.active_dims.size() > 3)
    throw ConfigError("grid.active_dims needs 1 to 3 entries");
  if (c.sizes.size() != c.active_dims.size())
    throw ConfigError("grid.sizes must match grid.active_dims");
  for (std::size_t a = 0; a < c.active_dims.size(); ++a) {
    if (c.active_dims[a] < 1 || c.active_dims[a] > D)
      throw ConfigError("grid.active_dims entries must lie in 1..D");
    if (a && c.active_dims[a] <= c.active_dims[a - 1])
      throw ConfigError("grid.active_dims must be increasing");
    if (c.sizes[a] < 8 || c.sizes[a] % 2) throw ConfigError("grid.sizes must be even and >= 8");
  }
  if (c.stability_sigma && !(*c.stability_sigma > 0.0))
    throw ConfigError("stability.sigma must be positive");
  if (!(c.lapse.rel_tol > 0.0) || c.lapse.max_iter < 1 || c.lapse.restart < 1)
    throw ConfigError("lapse settings must be positive");
  try {
    kasner::validate(c.evolve);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  if (!(c.final_ratio > 0.0 && c.final_ratio < 1.0))
    throw ConfigError("final.ratio must lie in (0, 1)");
  if (c.final_count < 2) throw ConfigError("final.count must be >= 2");
  if (c.diag.N0 < 0 || c.diag.N < 0) throw ConfigError("diag counts must be >= 0");
  if (c.u1 && D != 3) throw ConfigError("u1.enabled requires D = 3");
  if (!(c.u1_constraint_tol > 0.0)) throw ConfigError("u1.constraint_tol must be positive");
  if (c.output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) out += num(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

bool RunConfig::operator==(const RunConfig&) const = default;

double parse_number(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_plain(text);
  const double den = parse_plain(text.substr(slash + 1));
  if (den == 0.0) throw ConfigError("zero denominator in '" + std::string(text) + "'");
  return parse_plain(text.substr(0, slash)) / den;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (auto part : split(text, ',')) out.push_back(parse_number(part));
  return out;
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::size_t lineno = 0;
  for (std::string_view line : split(text, '\n')) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto val = trim(line.substr(eq + 1));
    try {
      apply(c, key, val);
    } catch (const ConfigError& ex) {
      throw ConfigError("line " + std::to_string(lineno) + " (" + std::string(key) +
                        "): " + ex.what());
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
  if (!c.q.empty()) kv("background.q", join(c.q));
  kv("background.B", num(c.B));
  if (c.search_dim) kv("background.dim", std::to_string(c.search_dim));
  kv("background.search", c.search ? "true" : "false");
  kv("background.tol", num(c.background_tol));
  kv("grid.active_dims", join(c.active_dims));
  kv("grid.sizes", join(c.sizes));
  for (const auto& [a, p] : c.perturb.xi) kv("perturb.xi." + std::to_string(a + 1), format_profile(p));
  for (const auto& [ij, p] : c.perturb.g)
    kv("perturb.g." + std::to_string(ij.first + 1) + "." + std::to_string(ij.second + 1),
       format_profile(p));
  for (const auto& [ij, p] : c.perturb.k)
    kv("perturb.k." + std::to_string(ij.first + 1) + "." + std::to_string(ij.second + 1),
       format_profile(p));
  if (!c.perturb.psi.empty()) kv("perturb.psi", format_profile(c.perturb.psi));
  if (!c.perturb.phi.empty()) kv("perturb.phi", format_profile(c.perturb.phi));
  for (const auto& [I, p] : c.perturb.beta)
    kv("perturb.scalar1d.beta." + std::to_string(I + 1), format_profile(p));
  for (const auto& [I, p] : c.perturb.kappa)
    kv("perturb.scalar1d.kappa." + std::to_string(I + 1), format_profile(p));
  if (c.stability_q) kv("stability.q", num(*c.stability_q));
  if (c.stability_sigma) kv("stability.sigma", num(*c.stability_sigma));
  if (c.stability_mode)
    kv("stability.mode", *c.stability_mode == StabilityMode::general ? "general" : "polarized");
  kv("lapse.rel_tol", num(c.lapse.rel_tol));
  kv("lapse.max_iter", std::to_string(c.lapse.max_iter));
  kv("lapse.restart", std::to_string(c.lapse.restart));
  kv("evolve.tau_step", num(c.evolve.tau_step));
  kv("evolve.t_final", num(c.evolve.t_final));
  kv("evolve.cfl_safety", num(c.evolve.cfl_safety));
  kv("evolve.snapshot_every", std::to_string(c.evolve.snapshot_every));
  kv("evolve.determinism", c.evolve.determinism ? "true" : "false");
  kv("final.ratio", num(c.final_ratio));
  kv("final.count", std::to_string(c.final_count));
  kv("diag.N0", std::to_string(c.diag.N0));
  kv("diag.N", std::to_string(c.diag.N));
  kv("diag.A", num(c.diag.A));
  kv("u1.enabled", c.u1 ? "true" : "false");
  kv("u1.constraint_tol", num(c.u1_constraint_tol));
  kv("output.dir", c.output_dir);
  kv("seed", std::to_string(c.seed));
  return o.str();
}

}  // namespace kasner
