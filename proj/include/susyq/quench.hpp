#pragma once

#include <cstdio>
#include <filesystem>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "susyq/dynamics.hpp"
#include "susyq/overlap.hpp"
#include "susyq/spectral_basis.hpp"
#include "susyq/talbot.hpp"
#include "susyq/thermal.hpp"

namespace susyq {

/// A quench V^(from_level) -> V^(to_level) of N fermions in one box.
struct QuenchSpec {
  BoxGeometry geom{4.0};
  int from_level = 1;
  int to_level = 2;
  long N = 30;
  long K = 0;  // 0 selects N at T = 0 and max(M_th, N + 10) at T > 0
  long M = 0;  // 0 selects the adaptive truncation
  int alpha_max = default_alpha_max;

  void validate() const {
    if (from_level < 1 || to_level > alpha_max || from_level >= to_level) {
      if (from_level == to_level) throw DomainError("trivial quench: from_level equals to_level");
      throw DomainError("quench levels must satisfy 1 <= from_level < to_level <= alpha_max");
    }
    if (N < 1) throw DomainError("N must be >= 1");
    if (K != 0 && K < N) throw DomainError("K must be >= N");
    if (M != 0 && M < std::max(N, K)) throw DomainError("M must be >= K");
  }
};

/// A model plus one thermal state per requested temperature, all sharing one overlap matrix.
struct PreparedQuench {
  QuenchModel model;
  std::vector<double> temperatures;  // T / T_F
  std::vector<ThermalState> thermal;
  bool from_cache = false;

  /// Model and thermal state for temperature i, trimmed to the rows that state needs.
  std::pair<QuenchModel, ThermalState> at(std::size_t i) const {
    const ThermalState& th = thermal.at(i);
    const long rows = th.zero_temperature() ? model.N : static_cast<long>(th.modes());
    return {model.leading_rows(rows), th};
  }
};

struct PrepareOptions {
  TruncationPolicy policy;
  std::string cache_dir;  // empty disables the overlap cache
};

namespace detail {

inline void extend_occupations(ThermalState& th, const std::function<double(long)>& energy, long K) {
  for (long k = static_cast<long>(th.occupations.size()) + 1; k <= K; ++k) {
    th.occupations.push_back(fermi_dirac(energy(k), th.mu, th.beta));
  }
}

struct ThermalPlan {
  std::vector<ThermalState> states;
  std::vector<double> weights;
  long K = 0;
};

inline ThermalPlan plan_thermal(const std::function<double(long)>& energy, long N, long K_request,
                                std::span<const double> temperatures, double fermi_temp) {
  ThermalPlan plan;
  plan.K = std::max(N, K_request);
  for (double T : temperatures) {
    ThermalState th = thermal_state(energy, N, T, fermi_temp);
    if (!th.zero_temperature()) plan.K = std::max({plan.K, static_cast<long>(th.modes()), N + 10});
    plan.states.push_back(std::move(th));
  }
  plan.weights.assign(static_cast<std::size_t>(plan.K), 0.0);
  for (auto& th : plan.states) {
    if (th.zero_temperature()) {
      for (long k = 0; k < N; ++k) plan.weights[k] = 1.0;
      continue;
    }
    extend_occupations(th, energy, plan.K);
    for (long k = 0; k < plan.K; ++k) plan.weights[k] = std::max(plan.weights[k], th.occupations[k]);
  }
  return plan;
}

inline std::string overlap_cache_key(const std::string& kind, const std::vector<double>& params,
                                     const TruncationPolicy& policy, std::span<const double> weights) {
  std::ostringstream os;
  os.precision(17);
  os << kind;
  for (double p : params) os << ' ' << p;
  os << " tol=" << policy.defect_tolerance << " step=" << policy.step << " cap=" << policy.cap
     << " fixed=" << policy.fixed_columns << " w=";
  for (double w : weights) os << w << ',';
  return os.str();
}

inline OverlapMatrix cached_overlap(const std::string& cache_dir, const std::string& key,
                                    const std::function<OverlapMatrix()>& build, bool& hit) {
  hit = false;
  if (cache_dir.empty()) return build();
  std::filesystem::create_directories(cache_dir);
  char name[64];
  std::snprintf(name, sizeof(name), "overlap-%016zx.bin", std::hash<std::string>{}(key));
  const std::string path = (std::filesystem::path(cache_dir) / name).string();
  if (auto u = load_overlap(path, key)) {
    hit = true;
    return *u;
  }
  OverlapMatrix u = build();
  save_overlap(path, u, key);
  return u;
}

}  // namespace detail

inline PreparedQuench prepare_quench(const QuenchSpec& spec, std::span<const double> temperatures,
                                     const PrepareOptions& options = {}) {
  spec.validate();
  const HierarchyBasis basis(spec.geom, spec.alpha_max);
  const auto energy = [&](long k) { return basis.energy(spec.from_level, k); };
  auto plan = detail::plan_thermal(energy, spec.N, spec.K, temperatures,
                                   fermi_temperature(spec.N, spec.geom));

  TruncationPolicy policy = options.policy;
  if (spec.M > 0) policy.fixed_columns = spec.M;
  const std::string key = detail::overlap_cache_key(
      "susy", {spec.geom.length, double(spec.from_level), double(spec.to_level), double(plan.K)}, policy,
      plan.weights);

  PreparedQuench out;
  out.model.U = detail::cached_overlap(
      options.cache_dir, key,
      [&] { return adaptive_overlap_matrix(basis, spec.from_level, spec.to_level, plan.K, plan.weights, policy); },
      out.from_cache);
  out.model.name = "susy " + std::to_string(spec.from_level) + "->" + std::to_string(spec.to_level);
  out.model.initial = level_spectrum(spec.from_level, static_cast<std::size_t>(plan.K), spec.geom);
  out.model.final = level_spectrum(spec.to_level, static_cast<std::size_t>(out.model.U.cols()), spec.geom);
  out.model.revival_time = revival_time(spec.geom);
  out.model.fermi_temperature = fermi_temperature(spec.N, spec.geom);
  out.model.N = spec.N;
  out.model.commensurate = true;
  out.temperatures.assign(temperatures.begin(), temperatures.end());
  out.thermal = std::move(plan.states);
  return out;
}

/// Box expansion L' -> L. T_F and the initial spectrum belong to the initial box, t_r to
/// the final one.
inline PreparedQuench prepare_expansion(const ExpansionSpec& spec, std::span<const double> temperatures,
                                        const PrepareOptions& options = {}) {
  ExpansionSpec s = spec;
  if (s.K < s.N) s.K = s.N;
  s.validate();
  const BoxGeometry initial_box(s.L_initial), final_box(s.L_final);
  const auto energy = [&](long k) { return box_energy(k, initial_box); };
  auto plan = detail::plan_thermal(energy, s.N, s.K, temperatures, fermi_temperature(s.N, initial_box));
  s.K = plan.K;

  TruncationPolicy policy = options.policy;
  if (s.M > 0) policy.fixed_columns = s.M;
  const std::string key =
      detail::overlap_cache_key("talbot", {s.L_initial, s.L_final, double(s.K)}, policy, plan.weights);

  PreparedQuench out;
  out.model.U = detail::cached_overlap(
      options.cache_dir, key, [&] { return talbot_overlap_matrix(s, plan.weights, policy); }, out.from_cache);
  out.model.name = "talbot";
  out.model.initial = level_spectrum(1, static_cast<std::size_t>(s.K), initial_box);
  const double ratio = s.L_final / s.L_initial;
  out.model.initial.turns_per_revival = static_cast<long double>(ratio) * ratio;
  out.model.final = level_spectrum(1, static_cast<std::size_t>(out.model.U.cols()), final_box);
  out.model.revival_time = revival_time(final_box);
  out.model.fermi_temperature = fermi_temperature(s.N, initial_box);
  out.model.N = s.N;
  out.model.commensurate = s.L_initial == s.L_final;
  out.temperatures.assign(temperatures.begin(), temperatures.end());
  out.thermal = std::move(plan.states);
  return out;
}

}  // namespace susyq
