#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "summation.hpp"

namespace bdr {

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"phi",  "sigma", "gram", "scan-positivity", "equi",    "pairs",
                                              "bml",  "schur", "rd",   "besov",           "poisson", "mixing",
                                              "ht",   "selftest"};
  return names;
}

struct RunConfig {
  int rank = 2;
  double epsilon = 1.0;
  double t = 0.25;
  std::optional<double> t_prime;
  int level = 2;
  std::vector<int> levels{1, 2, 3, 4};
  std::vector<double> t_grid;  // empty: 0.05, 0.10, ..., 0.90
  int n_max = 12;
  double tol = 0.05;
  double rhs_tol = 1e-8;
  int pairing = 0;
  int pairing_prime = 0;
  std::string mode = "radial";
  std::string experiment;
  std::string out;
  std::string format = "csv";
  unsigned threads = default_threads();
  std::string cache_dir;
  std::uint64_t seed = 20240607;
  bool timings = false;
  std::uint64_t budget = 100'000'000;

  double effective_t_prime() const { return t_prime.value_or(t); }
  std::vector<double> effective_t_grid() const {
    if (!t_grid.empty()) return t_grid;
    std::vector<double> g;
    for (int i = 1; i <= 18; ++i) g.push_back(i / 20.0);
    return g;
  }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

// "1..4" or "1,2,4".
inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  const auto dots = v.find("..");
  if (dots != std::string::npos) {
    const long long a = parse_int(key, trim(v.substr(0, dots))), b = parse_int(key, trim(v.substr(dots + 2)));
    if (b < a) throw ConfigError("key '" + key + "': empty range");
    for (long long i = a; i <= b; ++i) out.push_back(static_cast<int>(i));
    return out;
  }
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(key, trim(item))));
  return out;
}

// "0.05:0.05:0.9" (start:step:stop) or "0.1,0.25".
inline std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (std::count(v.begin(), v.end(), ':') == 2) {
    const auto p1 = v.find(':'), p2 = v.rfind(':');
    const double a = parse_double(key, trim(v.substr(0, p1)));
    const double step = parse_double(key, trim(v.substr(p1 + 1, p2 - p1 - 1)));
    const double b = parse_double(key, trim(v.substr(p2 + 1)));
    if (!(step > 0.0) || b < a) throw ConfigError("key '" + key + "': bad range");
    const long long count = static_cast<long long>(std::floor((b - a) / step + 1e-9));
    for (long long i = 0; i <= count; ++i) out.push_back(std::round((a + step * i) * 1e12) / 1e12);
    return out;
  }
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

}  // namespace detail

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{"rank",    "epsilon",      "t",     "t_prime", "level",   "levels",
                                          "t_grid",  "n_max",        "tol",   "rhs_tol", "pairing", "pairing_prime",
                                          "mode",    "experiment",   "out",   "format",  "threads", "cache_dir",
                                          "seed",    "timings",      "budget"};
  return keys;
}

// Flag spellings use dashes; keys use underscores.
inline std::string normalize_key(std::string key) {
  for (auto& c : key)
    if (c == '-') c = '_';
  return key;
}

inline void set_config_key(RunConfig& c, const std::string& raw_key, const std::string& value) {
  using namespace detail;
  const std::string key = normalize_key(raw_key);
  if (!config_keys().count(key)) throw ConfigError("unknown key '" + raw_key + "'");
  if (key == "rank") c.rank = static_cast<int>(parse_int(key, value));
  else if (key == "epsilon") c.epsilon = parse_double(key, value);
  else if (key == "t") c.t = parse_double(key, value);
  else if (key == "t_prime") c.t_prime = parse_double(key, value);
  else if (key == "level") c.level = static_cast<int>(parse_int(key, value));
  else if (key == "levels") c.levels = parse_int_list(key, value);
  else if (key == "t_grid") c.t_grid = parse_real_list(key, value);
  else if (key == "n_max") c.n_max = static_cast<int>(parse_int(key, value));
  else if (key == "tol") c.tol = parse_double(key, value);
  else if (key == "rhs_tol") c.rhs_tol = parse_double(key, value);
  else if (key == "pairing") c.pairing = static_cast<int>(parse_int(key, value));
  else if (key == "pairing_prime") c.pairing_prime = static_cast<int>(parse_int(key, value));
  else if (key == "mode") c.mode = value;
  else if (key == "experiment") c.experiment = value;
  else if (key == "out") c.out = value;
  else if (key == "format") c.format = value;
  else if (key == "threads") c.threads = static_cast<unsigned>(parse_int(key, value));
  else if (key == "cache_dir") c.cache_dir = value;
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "timings") c.timings = parse_bool(key, value);
  else if (key == "budget") c.budget = static_cast<std::uint64_t>(parse_int(key, value));
}

inline void validate_config(const RunConfig& c) {
  auto bad = [](const std::string& key, const std::string& why) { throw ConfigError("key '" + key + "': " + why); };
  if (c.rank < 2) bad("rank", "rank must be at least 2 (the group must be non-elementary)");
  if (c.rank > 60) bad("rank", "rank above 60 is not supported");
  if (!(c.epsilon > 0.0)) bad("epsilon", "must be positive");
  if (!std::isfinite(c.t)) bad("t", "must be finite");
  if (c.level < 0 || c.level > 12) bad("level", "must lie in [0, 12]");
  for (int k : c.levels)
    if (k < 1 || k > 12) bad("levels", "entries must lie in [1, 12]");
  if (c.n_max < 1) bad("n_max", "must be at least 1");
  if (!(c.tol > 0.0)) bad("tol", "must be positive");
  if (!(c.rhs_tol > 0.0)) bad("rhs_tol", "must be positive");
  if (c.pairing < 0 || c.pairing > 2) bad("pairing", "must be 0, 1 or 2");
  if (c.pairing_prime < 0 || c.pairing_prime > 2) bad("pairing_prime", "must be 0, 1 or 2");
  if (c.mode != "radial" && c.mode != "cylinder") bad("mode", "must be radial or cylinder");
  if (c.format != "csv" && c.format != "json") bad("format", "must be csv or json");
  if (c.threads < 1) bad("threads", "must be at least 1");
  if (c.budget < 1) bad("budget", "must be positive");
  if (!c.experiment.empty() &&
      std::find(subcommands().begin(), subcommands().end(), c.experiment) == subcommands().end())
    bad("experiment", "unknown experiment '" + c.experiment + "'");
  const bool uses_h = c.experiment == "ht" ||
                      ((c.experiment == "bml" || c.experiment == "schur") && c.pairing == 1);
  const bool uses_h_prime = c.experiment == "schur" && c.pairing_prime == 1;
  const double tp = c.effective_t_prime();
  if ((uses_h && (c.t <= 0.0 || c.t > 0.5)) || (uses_h_prime && (tp <= 0.0 || tp > 0.5)))
    throw PreconditionError("the H_t pairing needs 0 < t <= 1/2: for t > 1/2 the kernel form is not positive");
}

// key = value lines; '#' starts a comment. Unknown keys are rejected. No validation.
inline RunConfig parse_config_entries(const std::string& text, RunConfig base = {}) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = hash == std::string::npos ? line : line.substr(0, hash);
    if (trim(body).empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      const int col = static_cast<int>(body.find_first_not_of(" \t")) + 1;
      throw ConfigError("expected key = value", lineno, col);
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", lineno, static_cast<int>(eq) + 1);
    try {
      set_config_key(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), lineno, static_cast<int>(body.find(key)) + 1);
    }
  }
  return base;
}

inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  RunConfig c = parse_config_entries(text, std::move(base));
  validate_config(c);
  return c;
}

constexpr const char* kEnvPrefix = "BDREP_";

// BDREP_<KEY> overrides, e.g. BDREP_N_MAX=10.
inline void apply_env_overrides(RunConfig& c) {
  for (const auto& key : config_keys()) {
    std::string name = kEnvPrefix;
    for (char ch : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* v = std::getenv(name.c_str())) set_config_key(c, key, v);
  }
}

// Everything that can influence results; thread count, output path and timing switch are left out
// so that reports do not depend on how they were produced.
inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j{{"rank", c.rank},       {"epsilon", c.epsilon},      {"t", c.t},
                   {"t_prime", c.effective_t_prime()},                  {"level", c.level},
                   {"levels", c.levels},   {"t_grid", c.effective_t_grid()},
                   {"n_max", c.n_max},     {"tol", c.tol},              {"rhs_tol", c.rhs_tol},
                   {"pairing", c.pairing}, {"pairing_prime", c.pairing_prime},
                   {"mode", c.mode},       {"seed", c.seed},            {"budget", c.budget}};
  return j;
}

}  // namespace bdr
