#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "susyq/errors.hpp"
#include "susyq/overlap.hpp"
#include "susyq/quench.hpp"
#include "susyq/talbot.hpp"
#include "susyq/work.hpp"

namespace susyq {

enum class Experiment { survival, wpd, work_scan, phases, basis_dump };
enum class QuenchKind { susy, talbot };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::survival: return "survival";
    case Experiment::wpd: return "wpd";
    case Experiment::work_scan: return "work-scan";
    case Experiment::phases: return "phases";
    default: return "basis-dump";
  }
}

struct RunConfig {
  Experiment experiment = Experiment::survival;
  QuenchKind quench = QuenchKind::susy;
  QuenchSpec susy;
  ExpansionSpec expansion;
  std::vector<double> temperatures{0.0};

  double t_max = 2.0;  // units of t_r
  long points = 2000;
  bool include_quarters = true;
  std::vector<double> phase_times{0.25};  // units of t_r

  TruncationPolicy truncation;
  WpdOptions wpd;
  FiniteTOptions finite_t;

  std::vector<int> scan_alphas{2, 3, 4};
  long scan_N_min = 1;
  long scan_N_max = 50;

  long basis_states = 6;
  long basis_points = 401;
  bool dump_overlap = true;

  std::string output = "out";
  std::string cache_dir;

  std::map<std::string, std::string> entries;  // normalized key = value as applied
};

struct ConfigKey {
  const char* name;
  const char* help;
};

/// Every accepted key. The CLI exposes each one as --<key>.
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"experiment", "survival | wpd | work-scan | phases | basis-dump"},
      {"quench", "susy | talbot"},
      {"L", "final box width"},
      {"L_initial", "initial box width (talbot)"},
      {"from_level", "initial hierarchy level"},
      {"to_level", "final hierarchy level"},
      {"alpha_max", "deepest hierarchy level available"},
      {"N", "particle number"},
      {"K", "retained initial states (0 = automatic)"},
      {"M", "final-basis truncation (0 = adaptive)"},
      {"temperatures", "comma list of T/T_F"},
      {"t_max", "end of the time grid in units of t_r"},
      {"points", "uniform samples on the time grid"},
      {"include_quarters", "add exact multiples of t_r/4 to the grid"},
      {"phase_times", "comma list of t/t_r for the phases experiment"},
      {"defect_tolerance", "completeness defect target"},
      {"truncation_step", "M is a multiple of this"},
      {"truncation_cap", "largest M tried before failing"},
      {"max_order", "largest excitation order enumerated"},
      {"threshold", "smallest record probability kept"},
      {"candidate_cap", "largest number of enumerated sets"},
      {"window_order2", "particle window for order 2 (0 = 4 N)"},
      {"window_order3", "particle window for order 3"},
      {"window_order4", "particle window for order 4"},
      {"max_order_initial", "thermal excitation order of the initial ensemble"},
      {"allow_large_N", "permit finite-temperature work distributions above N = 10"},
      {"alphas", "comma list of levels for work-scan"},
      {"N_min", "work-scan lower particle number"},
      {"N_max", "work-scan upper particle number"},
      {"basis_states", "states per level in basis-dump"},
      {"basis_points", "grid points in basis-dump"},
      {"dump_overlap", "write the overlap matrix in basis-dump"},
      {"output", "output directory"},
      {"cache_dir", "overlap cache directory (empty disables)"},
  };
  return keys;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

class ValueReader {
 public:
  ValueReader(std::vector<std::string>& errors) : errors_(errors) {}

  bool to_double(const std::string& key, const std::string& v, double& out) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end || v.empty() || !std::isfinite(x)) {
      errors_.push_back(key + ": expected a number, got '" + v + "'");
      return false;
    }
    out = x;
    return true;
  }

  bool to_long(const std::string& key, const std::string& v, long& out) {
    long x = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end || v.empty()) {
      errors_.push_back(key + ": expected an integer, got '" + v + "'");
      return false;
    }
    out = x;
    return true;
  }

  bool to_int(const std::string& key, const std::string& v, int& out) {
    long x = 0;
    if (!to_long(key, v, x)) return false;
    out = static_cast<int>(x);
    return true;
  }

  bool to_bool(const std::string& key, const std::string& v, bool& out) {
    if (v == "true" || v == "1" || v == "yes") {
      out = true;
    } else if (v == "false" || v == "0" || v == "no") {
      out = false;
    } else {
      errors_.push_back(key + ": expected true or false, got '" + v + "'");
      return false;
    }
    return true;
  }

  template <class T>
  bool to_list(const std::string& key, const std::string& v, std::vector<T>& out) {
    std::vector<T> items;
    for (const auto& s : split_list(v)) {
      if constexpr (std::is_same_v<T, double>) {
        double x = 0.0;
        if (!to_double(key, s, x)) return false;
        items.push_back(x);
      } else {
        int x = 0;
        if (!to_int(key, s, x)) return false;
        items.push_back(x);
      }
    }
    if (items.empty()) {
      errors_.push_back(key + ": empty list");
      return false;
    }
    out = std::move(items);
    return true;
  }

 private:
  std::vector<std::string>& errors_;
};

inline void apply_entry(RunConfig& c, const std::string& key, const std::string& v, ValueReader& r,
                        std::vector<std::string>& errors) {
  double d = 0.0;
  if (key == "experiment") {
    if (v == "survival") c.experiment = Experiment::survival;
    else if (v == "wpd") c.experiment = Experiment::wpd;
    else if (v == "work-scan") c.experiment = Experiment::work_scan;
    else if (v == "phases") c.experiment = Experiment::phases;
    else if (v == "basis-dump") c.experiment = Experiment::basis_dump;
    else errors.push_back("experiment: unknown experiment '" + v + "'");
  } else if (key == "quench") {
    if (v == "susy") c.quench = QuenchKind::susy;
    else if (v == "talbot") c.quench = QuenchKind::talbot;
    else errors.push_back("quench: expected susy or talbot, got '" + v + "'");
  } else if (key == "L") {
    if (r.to_double(key, v, d)) {
      c.susy.geom.length = d;
      c.expansion.L_final = d;
    }
  } else if (key == "L_initial") {
    r.to_double(key, v, c.expansion.L_initial);
  } else if (key == "from_level") {
    r.to_int(key, v, c.susy.from_level);
  } else if (key == "to_level") {
    r.to_int(key, v, c.susy.to_level);
  } else if (key == "alpha_max") {
    r.to_int(key, v, c.susy.alpha_max);
  } else if (key == "N") {
    long n = 0;
    if (r.to_long(key, v, n)) c.susy.N = c.expansion.N = n;
  } else if (key == "K") {
    long n = 0;
    if (r.to_long(key, v, n)) c.susy.K = c.expansion.K = n;
  } else if (key == "M") {
    long n = 0;
    if (r.to_long(key, v, n)) c.susy.M = c.expansion.M = n;
  } else if (key == "temperatures") {
    r.to_list(key, v, c.temperatures);
  } else if (key == "t_max") {
    r.to_double(key, v, c.t_max);
  } else if (key == "points") {
    r.to_long(key, v, c.points);
  } else if (key == "include_quarters") {
    r.to_bool(key, v, c.include_quarters);
  } else if (key == "phase_times") {
    r.to_list(key, v, c.phase_times);
  } else if (key == "defect_tolerance") {
    r.to_double(key, v, c.truncation.defect_tolerance);
  } else if (key == "truncation_step") {
    r.to_long(key, v, c.truncation.step);
  } else if (key == "truncation_cap") {
    r.to_long(key, v, c.truncation.cap);
  } else if (key == "max_order") {
    if (r.to_int(key, v, c.wpd.max_order)) c.finite_t.max_order_final = c.wpd.max_order;
  } else if (key == "threshold") {
    if (r.to_double(key, v, c.wpd.threshold)) c.finite_t.threshold = c.wpd.threshold;
  } else if (key == "candidate_cap") {
    r.to_double(key, v, c.wpd.candidate_cap);
  } else if (key == "window_order2") {
    r.to_long(key, v, c.wpd.window_order2);
  } else if (key == "window_order3") {
    r.to_long(key, v, c.wpd.windows[3]);
  } else if (key == "window_order4") {
    r.to_long(key, v, c.wpd.windows[4]);
  } else if (key == "max_order_initial") {
    r.to_int(key, v, c.finite_t.max_order_initial);
  } else if (key == "allow_large_N") {
    r.to_bool(key, v, c.finite_t.allow_large_N);
  } else if (key == "alphas") {
    r.to_list(key, v, c.scan_alphas);
  } else if (key == "N_min") {
    r.to_long(key, v, c.scan_N_min);
  } else if (key == "N_max") {
    r.to_long(key, v, c.scan_N_max);
  } else if (key == "basis_states") {
    r.to_long(key, v, c.basis_states);
  } else if (key == "basis_points") {
    r.to_long(key, v, c.basis_points);
  } else if (key == "dump_overlap") {
    r.to_bool(key, v, c.dump_overlap);
  } else if (key == "output") {
    c.output = v;
  } else if (key == "cache_dir") {
    c.cache_dir = v;
  }
}

inline bool known_key(const std::string& key) {
  const auto& keys = config_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return key == k.name; });
}

}  // namespace detail

/// Semantic checks; every violation is reported, not just the first.
inline std::vector<std::string> validation_errors(const RunConfig& c) {
  std::vector<std::string> e;
  for (double T : c.temperatures) {
    if (T < 0.0) e.push_back("temperatures: negative temperature " + std::to_string(T));
  }
  if (!(c.susy.geom.length > 0.0)) e.push_back("L: box width must be positive");
  if (c.susy.N < 1) e.push_back("N: must be >= 1");
  if (c.susy.K != 0 && c.susy.K < c.susy.N) e.push_back("K: must be 0 or >= N");
  if (c.susy.M != 0 && c.susy.M < std::max(c.susy.N, c.susy.K)) e.push_back("M: must be 0 or >= max(N, K)");
  if (c.quench == QuenchKind::susy && c.experiment != Experiment::work_scan) {
    if (c.susy.alpha_max < 1) e.push_back("alpha_max: must be >= 1");
    if (c.susy.from_level == c.susy.to_level) {
      e.push_back("to_level: trivial quench (from_level equals to_level)");
    } else if (c.susy.from_level < 1 || c.susy.from_level > c.susy.to_level) {
      e.push_back("from_level: must satisfy 1 <= from_level < to_level");
    }
    if (c.susy.to_level > c.susy.alpha_max) e.push_back("to_level: exceeds alpha_max");
  }
  if (c.quench == QuenchKind::talbot) {
    if (!(c.expansion.L_initial > 0.0)) e.push_back("L_initial: must be positive");
    if (c.expansion.L_initial > c.expansion.L_final) e.push_back("L_initial: must not exceed L (expansions only)");
  }
  if (!(c.t_max >= 0.0)) e.push_back("t_max: must be >= 0");
  if (c.points < 1) e.push_back("points: must be >= 1");
  for (double t : c.phase_times) {
    if (t < 0.0) e.push_back("phase_times: negative time");
  }
  if (!(c.truncation.defect_tolerance > 0.0)) e.push_back("defect_tolerance: must be positive");
  if (c.truncation.step < 1) e.push_back("truncation_step: must be >= 1");
  if (c.truncation.cap < c.truncation.step) e.push_back("truncation_cap: must be >= truncation_step");
  if (c.wpd.max_order < 0 || c.wpd.max_order > 7) e.push_back("max_order: must be in 0..7");
  if (c.wpd.threshold < 0.0) e.push_back("threshold: must be >= 0");
  if (c.finite_t.max_order_initial < 0) e.push_back("max_order_initial: must be >= 0");
  for (int a : c.scan_alphas) {
    if (a < 1) e.push_back("alphas: levels must be >= 1");
  }
  if (c.scan_N_min < 1 || c.scan_N_max < c.scan_N_min) e.push_back("N_min/N_max: need 1 <= N_min <= N_max");
  if (c.basis_states < 1) e.push_back("basis_states: must be >= 1");
  if (c.basis_points < 2) e.push_back("basis_points: must be >= 2");
  if (c.output.empty()) e.push_back("output: must not be empty");
  return e;
}

inline void validate(const RunConfig& c) {
  const auto errors = validation_errors(c);
  if (errors.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& s : errors) msg += "\n  " + s;
  throw ConfigError(msg);
}

/// Applies key = value overrides (e.g. from the command line) on top of `c`, then validates.
inline void apply_overrides(RunConfig& c, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::vector<std::string> errors;
  detail::ValueReader reader(errors);
  for (const auto& [k, v] : kv) {
    if (!detail::known_key(k)) {
      errors.push_back("unknown key '" + k + "'");
      continue;
    }
    detail::apply_entry(c, k, v, reader, errors);
    c.entries[k] = v;
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& s : errors) msg += "\n  " + s;
    throw ConfigError(msg);
  }
}

/// Parses `key = value` lines; '#' starts a comment. Syntax errors carry line:column.
inline RunConfig parse_config(std::string_view text, bool run_validation = true) {
  RunConfig c;
  std::vector<std::string> errors;
  detail::ValueReader reader(errors);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    const auto hash = raw.find('#');
    const std::string_view line = raw.substr(0, hash);
    if (detail::trim(line).empty()) {
      if (nl == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    const auto first = line.find_first_not_of(" \t\r");
    const auto where = [&](std::size_t col) {
      return "line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) + ": ";
    };
    if (eq == std::string_view::npos) throw ConfigError(where(first) + "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where(first) + "missing key before '='");
    if (key.find_first_of(" \t") != std::string::npos) throw ConfigError(where(first) + "key contains whitespace");
    if (!detail::known_key(key)) throw ConfigError(where(first) + "unknown key '" + key + "'");
    if (value.empty()) {
      throw ConfigError(where(eq + 1) + "missing value for '" + key + "'");
    }
    const std::size_t before = errors.size();
    detail::apply_entry(c, key, value, reader, errors);
    for (std::size_t i = before; i < errors.size(); ++i) {
      errors[i] = where(line.find_first_not_of(" \t", eq + 1)) + errors[i];
    }
    c.entries[key] = value;
    if (nl == text.size()) break;
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& s : errors) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  if (run_validation) validate(c);
  return c;
}

}  // namespace susyq
