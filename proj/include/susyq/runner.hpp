#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "susyq/config.hpp"
#include "susyq/dynamics.hpp"
#include "susyq/quench.hpp"
#include "susyq/spectral_basis.hpp"
#include "susyq/work.hpp"

namespace susyq {

inline constexpr const char* artifact_version = "1.0.0";

struct RunResult {
  ExitCode status = ExitCode::success;
  std::vector<std::string> files;
  nlohmann::json manifest;
};

namespace detail {

/// Full-precision scientific notation (17 significant digits).
inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", x);
  return buf;
}

inline std::string tag(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& root) : root_(root) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw ConfigError("cannot create output directory " + root_.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    const auto path = root_ / name;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string(), ExitCode::numerical_failure);
    files_.push_back(name);
    return out;
  }
  std::string path(const std::string& name) {
    files_.push_back(name);
    return (root_ / name).string();
  }
  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

inline PreparedQuench prepare(const RunConfig& c) {
  PrepareOptions opt{c.truncation, c.cache_dir};
  if (c.quench == QuenchKind::talbot) return prepare_expansion(c.expansion, c.temperatures, opt);
  return prepare_quench(c.susy, c.temperatures, opt);
}

inline nlohmann::json truncation_entry(const PreparedQuench& pq, std::size_t i, const RunConfig& c) {
  const auto [model, th] = pq.at(i);
  std::vector<double> weights(static_cast<std::size_t>(model.U.rows()), 1.0);
  if (!th.zero_temperature()) weights = th.occupations;
  nlohmann::json j;
  j["T_over_TF"] = pq.temperatures[i];
  j["K"] = model.U.rows();
  j["M"] = model.U.cols();
  j["quadrature_order"] = model.U.quadrature_order;
  j["max_completeness_defect"] = model.U.max_defect();
  j["weighted_max_completeness_defect"] = weighted_max_defect(model.U.completeness_defect, weights);
  j["completeness_defects"] = model.U.completeness_defect;
  j["defect_tolerance"] = c.truncation.defect_tolerance;
  j["cache_hit"] = pq.from_cache;
  if (!th.zero_temperature()) {
    j["beta"] = th.beta;
    j["mu"] = th.mu;
    j["thermal_modes"] = th.modes();
    double n = 0.0;
    for (double x : th.occupations) n += x;
    j["particle_number"] = n;
  }
  return j;
}

inline void run_survival(const RunConfig& c, OutputDir& out, nlohmann::json& m) {
  const PreparedQuench pq = prepare(c);
  const auto grid = time_grid(c.t_max, c.points, c.include_quarters);
  m["revival_time"] = pq.model.revival_time;
  for (std::size_t i = 0; i < pq.temperatures.size(); ++i) {
    const auto [model, th] = pq.at(i);
    m["truncation"].push_back(truncation_entry(pq, i, c));
    const auto snaps = survival_sweep(model, th, grid);
    auto f = out.open("survival_T" + tag(pq.temperatures[i]) + ".csv");
    f << "t,t_over_tr,F,logF,max_offdiag,classification\n";
    nlohmann::json quarters = nlohmann::json::array();
    for (const auto& s : snaps) {
      f << num(s.t) << ',' << num(s.tau) << ',' << num(s.F) << ',' << num(s.log_F) << ','
        << num(s.diagnostics.max_offdiag) << ',' << to_string(s.diagnostics.label) << '\n';
      if (std::fmod(4.0 * s.tau, 1.0) == 0.0) {
        quarters.push_back({{"t_over_tr", s.tau}, {"F", s.F}, {"classification", to_string(s.diagnostics.label)}});
      }
    }
    m["quarter_revivals"].push_back({{"T_over_TF", pq.temperatures[i]}, {"samples", quarters}});
  }
}

inline void run_phases(const RunConfig& c, OutputDir& out, nlohmann::json& m) {
  const PreparedQuench pq = prepare(c);
  m["revival_time"] = pq.model.revival_time;
  for (double tau : c.phase_times) {
    const auto sp = single_particle_phases(tau, std::max<long>(c.susy.N, 1));
    auto f = out.open("phases_single_particle_t" + tag(tau) + ".csv");
    f << "n,phi_even,phi_odd\n";
    for (std::size_t n = 0; n < sp.even.size(); ++n) f << n << ',' << num(sp.even[n]) << ',' << num(sp.odd[n]) << '\n';
  }
  for (std::size_t i = 0; i < pq.temperatures.size(); ++i) {
    const auto [model, th] = pq.at(i);
    m["truncation"].push_back(truncation_entry(pq, i, c));
    for (double tau : c.phase_times) {
      const auto snap = survival_sweep(model, th, {tau}).front();
      auto f = out.open("phases_T" + tag(pq.temperatures[i]) + "_t" + tag(tau) + ".csv");
      f << "k,re,im,modulus,phase\n";
      for (std::size_t k = 0; k < snap.diagnostics.diagonal.size(); ++k) {
        const auto z = snap.diagnostics.diagonal[k];
        f << (k + 1) << ',' << num(z.real()) << ',' << num(z.imag()) << ',' << num(std::abs(z)) << ','
          << num(std::arg(z)) << '\n';
      }
      m["phase_diagnostics"].push_back({{"T_over_TF", pq.temperatures[i]},
                                        {"t_over_tr", tau},
                                        {"F", snap.F},
                                        {"max_offdiag", snap.diagnostics.max_offdiag},
                                        {"max_modulus_error", snap.diagnostics.max_modulus_error},
                                        {"max_abs_phase", snap.diagnostics.max_phase},
                                        {"classification", to_string(snap.diagnostics.label)}});
    }
  }
}

inline nlohmann::json spectrum_json(const WorkSpectrum& ws) {
  nlohmann::json j;
  j["total_probability"] = ws.total_probability;
  j["first_moment"] = ws.first_moment;
  j["enumerated_probability"] = ws.enumerated_probability;
  j["enumerated_first_moment"] = ws.enumerated_first_moment;
  j["dropped_probability"] = ws.dropped_probability;
  j["window_probability"] = ws.window_probability;
  j["ground_ground_probability"] = ws.ground_ground_probability;
  j["commensurate"] = ws.commensurate;
  j["truncation"] = {{"max_order", ws.truncation.max_order},
                     {"M", ws.truncation.M},
                     {"threshold", ws.truncation.threshold}};
  for (const auto& o : ws.orders) {
    j["orders"].push_back({{"order", o.order},
                           {"probability", o.probability},
                           {"first_moment", o.first_moment},
                           {"enumerated_probability", o.enumerated_probability},
                           {"records", o.records},
                           {"candidates", o.candidates},
                           {"particle_window", o.particle_window}});
  }
  j["record_count"] = ws.records.size();
  j["bins"] = nlohmann::json::array();
  for (const auto& b : ws.bins) {
    nlohmann::json e{{"W", b.W}, {"P", b.P}, {"count", b.count}};
    if (ws.commensurate) e["W_over_E1"] = b.key;
    else e["W_over_E1"] = b.W_over_E1;
    j["bins"].push_back(std::move(e));
  }
  return j;
}

inline void run_wpd(const RunConfig& c, OutputDir& out, nlohmann::json& m) {
  const PreparedQuench pq = prepare(c);
  for (std::size_t i = 0; i < pq.temperatures.size(); ++i) {
    const auto [model, th] = pq.at(i);
    m["truncation"].push_back(truncation_entry(pq, i, c));
    WorkSpectrum ws;
    if (th.zero_temperature()) {
      ws = enumerate_final_states(model, model.N, c.wpd);
    } else {
      FiniteTOptions ft = c.finite_t;
      ft.final_windows = c.wpd;
      ft.max_order_final = c.wpd.max_order;
      ft.threshold = c.wpd.threshold;
      ws = wpd_finite_T(model, th, ft);
    }
    nlohmann::json j = spectrum_json(ws);
    j["quench"] = model.name;
    j["N"] = model.N;
    j["T_over_TF"] = pq.temperatures[i];
    j["E1"] = model.final.unit;
    if (c.quench == QuenchKind::susy) {
      j["average_work_closed_form"] = average_work(c.susy.to_level, model.N, c.susy.geom) -
                                      average_work(c.susy.from_level, model.N, c.susy.geom);
      j["ground_state_shift_over_E1"] = ground_state_shift_quanta(c.susy.to_level, model.N) -
                                        ground_state_shift_quanta(c.susy.from_level, model.N);
    }
    const std::string t = tag(pq.temperatures[i]);
    std::ofstream(out.path("wpd_T" + t + ".json")) << j.dump(1) << '\n';
    if (!ws.records.empty()) {
      // holes and particles are relative to the final ground set {1..N}, space separated
      auto f = out.open("wpd_records_T" + t + ".csv");
      f << "W,W_over_E1,P,order,holes,particles\n";
      const auto list = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + std::to_string(v[k]);
        return s;
      };
      for (const auto& r : ws.records) {
        f << num(r.W) << ',';
        if (ws.commensurate) f << std::llround(r.W_over_E1);
        else f << num(r.W_over_E1);
        f << ',' << num(r.P) << ',' << r.order << ',' << list(r.holes) << ',' << list(r.particles) << '\n';
      }
    }
    auto f = out.open("wpd_bins_T" + t + ".csv");
    f << "W,W_over_E1,P,count\n";
    for (const auto& b : ws.bins) f << num(b.W) << ',' << num(b.W_over_E1) << ',' << num(b.P) << ',' << b.count << '\n';
    m["work"].push_back({{"T_over_TF", pq.temperatures[i]},
                         {"total_probability", ws.total_probability},
                         {"first_moment", ws.first_moment},
                         {"enumerated_probability", ws.enumerated_probability},
                         {"dropped_probability", ws.dropped_probability},
                         {"records", ws.records.size()},
                         {"bins", ws.bins.size()}});
  }
}

inline void run_work_scan(const RunConfig& c, OutputDir& out, nlohmann::json& m) {
  const auto rows = work_scan(c.scan_alphas, c.scan_N_min, c.scan_N_max, c.susy.geom);
  auto f = out.open("work_scan.csv");
  f << "N,alpha,average_work,irreversible_work,ground_state_shift,average_work_over_E1,"
       "irreversible_work_over_E1,ground_state_shift_over_E1\n";
  for (const auto& r : rows) {
    f << r.N << ',' << r.alpha << ',' << num(r.average) << ',' << num(r.irreversible) << ',' << num(r.ground_shift)
      << ',' << average_work_quanta(r.alpha, r.N) << ',' << irreversible_work_quanta(r.alpha, r.N) << ','
      << ground_state_shift_quanta(r.alpha, r.N) << '\n';
  }
  m["rows"] = rows.size();
}

inline void run_basis_dump(const RunConfig& c, OutputDir& out, nlohmann::json& m) {
  const BoxGeometry geom(c.quench == QuenchKind::talbot ? c.expansion.L_final : c.susy.geom.length);
  const int amax = c.susy.alpha_max;
  const HierarchyBasis basis(geom, amax);
  std::vector<double> xs;
  for (long i = 0; i < c.basis_points; ++i) {
    xs.push_back(geom.length * ((static_cast<double>(i) + 0.5) / static_cast<double>(c.basis_points) - 0.5));
  }
  {
    auto f = out.open("basis.csv");
    f << "x";
    for (int a = 1; a <= amax; ++a)
      for (long n = 1; n <= c.basis_states; ++n) f << ",psi_a" << a << "_m" << n;
    f << '\n';
    std::vector<SingleParticleState> states;
    for (int a = 1; a <= amax; ++a)
      for (long n = 1; n <= c.basis_states; ++n) states.push_back(basis.state(a, n));
    for (double x : xs) {
      f << num(x);
      for (const auto& s : states) f << ',' << num(s(x));
      f << '\n';
    }
  }
  {
    auto f = out.open("potentials.csv");
    f << "x";
    for (int a = 1; a <= amax; ++a) f << ",V_a" << a;
    f << '\n';
    std::vector<std::function<double(double)>> pots;
    for (int a = 1; a <= amax; ++a) pots.push_back(partner_potential(a, geom));
    for (double x : xs) {
      f << num(x);
      for (const auto& v : pots) f << ',' << num(v(x));
      f << '\n';
    }
  }
  if (c.dump_overlap) {
    const PreparedQuench pq = prepare(c);
    m["truncation"].push_back(truncation_entry(pq, 0, c));
    write_overlap_csv(out.path("overlap.csv"), pq.model.U);
  }
}

}  // namespace detail

/// Runs one experiment, writing its files and manifest.json under c.output.
inline RunResult run(const RunConfig& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  nlohmann::json& m = result.manifest;
  m["version"] = artifact_version;
  m["experiment"] = to_string(c.experiment);
  m["config"] = c.entries;
  m["resolved"] = {{"quench", c.quench == QuenchKind::talbot ? "talbot" : "susy"},
                   {"L", c.quench == QuenchKind::talbot ? c.expansion.L_final : c.susy.geom.length},
                   {"L_initial", c.expansion.L_initial},
                   {"from_level", c.susy.from_level},
                   {"to_level", c.susy.to_level},
                   {"N", c.susy.N},
                   {"temperatures", c.temperatures},
                   {"t_max_over_tr", c.t_max},
                   {"points", c.points},
                   {"include_quarters", c.include_quarters}};
  m["tolerances"] = {{"defect_tolerance", c.truncation.defect_tolerance},
                     {"truncation_step", c.truncation.step},
                     {"truncation_cap", c.truncation.cap},
                     {"revival_tolerance_zero_T", revival_tolerance_zero_T},
                     {"revival_tolerance_finite_T", revival_tolerance_finite_T},
                     {"particle_number_tolerance", particle_number_tolerance},
                     {"occupation_cutoff", occupation_cutoff},
                     {"wpd_threshold", c.wpd.threshold},
                     {"wpd_max_order", c.wpd.max_order},
                     {"wpd_candidate_cap", c.wpd.candidate_cap}};
  detail::OutputDir out(c.output);
  try {
    validate(c);
    switch (c.experiment) {
      case Experiment::survival: detail::run_survival(c, out, m); break;
      case Experiment::phases: detail::run_phases(c, out, m); break;
      case Experiment::wpd: detail::run_wpd(c, out, m); break;
      case Experiment::work_scan: detail::run_work_scan(c, out, m); break;
      case Experiment::basis_dump: detail::run_basis_dump(c, out, m); break;
    }
    m["status"] = "ok";
  } catch (const Error& e) {
    result.status = e.code();
    m["status"] = "error";
    m["error"] = e.what();
    log << "error: " << e.what() << '\n';
  }
  m["exit_code"] = static_cast<int>(result.status);
  m["outputs"] = out.files();
  m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(out.root() / "manifest.json") << m.dump(1) << '\n';
  result.files = out.files();
  result.files.push_back("manifest.json");
  return result;
}

}  // namespace susyq
