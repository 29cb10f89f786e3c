#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "susyq/determinant.hpp"
#include "susyq/errors.hpp"
#include "susyq/geometry.hpp"
#include "susyq/overlap.hpp"
#include "susyq/spectrum.hpp"
#include "susyq/thermal.hpp"

namespace susyq {

using ComplexMatrix = Eigen::MatrixXcd;

/// t_r = 4 L^2 / pi = 2 pi / E_1.
inline double revival_time(const BoxGeometry& geom) {
  return 4.0 * geom.length * geom.length / std::numbers::pi;
}

struct ParityPhases {
  std::vector<double> even;  // phi^e_n = 2 pi (2n+1)^2 t / t_r, n = 0..n_max-1
  std::vector<double> odd;   // phi^o_n = 8 pi (n+1)^2 t / t_r
};

/// Box phases E t split by parity, reduced to [0, 2 pi). `tau` is t / t_r.
inline ParityPhases single_particle_phases(double tau, long n_max) {
  if (!(tau >= 0.0)) throw DomainError("phases need t >= 0");
  const auto reduce = [tau](long double quanta) {
    long double turns = quanta * static_cast<long double>(tau);
    turns -= std::floor(turns);
    return static_cast<double>(2.0L * std::numbers::pi_v<long double> * turns);
  };
  ParityPhases p;
  for (long n = 0; n < n_max; ++n) {
    const long double e = 2.0L * n + 1.0L;
    const long double o = 2.0L * (n + 1);
    p.even.push_back(reduce(e * e));
    p.odd.push_back(reduce(o * o));
  }
  return p;
}

namespace detail {

inline ComplexMatrix assemble_evolution(const OverlapMatrix& U,
                                        const std::vector<std::complex<double>>& to_phase,
                                        const std::vector<std::complex<double>>& from_phase) {
  const Eigen::Index K = U.rows();
  const Eigen::Index M = U.cols();
  Eigen::VectorXd c(M), s(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    c[m] = to_phase[m].real();
    s[m] = to_phase[m].imag();
  }
  const auto& u = U.entries;
  const Eigen::MatrixXd re = (u * c.asDiagonal()) * u.transpose();
  const Eigen::MatrixXd im = (u * s.asDiagonal()) * u.transpose();
  ComplexMatrix O(K, K);
  for (Eigen::Index l = 0; l < K; ++l) {
    const std::complex<double> back = std::conj(from_phase[l]);
    for (Eigen::Index k = 0; k < K; ++k) O(k, l) = std::complex<double>(re(k, l), im(k, l)) * back;
  }
  return O;
}

inline void require_dimensions(const OverlapMatrix& U, const Spectrum& from, const Spectrum& to) {
  if (static_cast<Eigen::Index>(from.size()) < U.rows() || static_cast<Eigen::Index>(to.size()) != U.cols()) {
    throw NumericalError("overlap matrix and spectra dimensions disagree");
  }
}

}  // namespace detail

/// O_kl(t) = sum_m U_km U_lm exp(-i (E_from[l] - E_to[m]) t), a K x K complex matrix.
/// `tau` is the time in units of the revival period the spectra were tagged with.
inline ComplexMatrix evolution_matrix_at(const OverlapMatrix& U, const Spectrum& from,
                                         const Spectrum& to, double tau) {
  detail::require_dimensions(U, from, to);
  const PhaseClock to_clock = PhaseClock::at_fraction(to, tau);
  const PhaseClock from_clock = PhaseClock::at_fraction(from, tau);
  std::vector<std::complex<double>> tp(to.size()), fp(static_cast<std::size_t>(U.rows()));
  for (std::size_t m = 0; m < tp.size(); ++m) tp[m] = to_clock(to.quanta[m]);
  for (std::size_t k = 0; k < fp.size(); ++k) fp[k] = from_clock(from.quanta[k]);
  return detail::assemble_evolution(U, tp, fp);
}

/// Same as evolution_matrix_at with a physical time t.
inline ComplexMatrix evolution_matrix(const OverlapMatrix& U, const Spectrum& from,
                                      const Spectrum& to, double t) {
  detail::require_dimensions(U, from, to);
  const PhaseClock to_clock(to.unit, t);
  const PhaseClock from_clock(from.unit, t);
  std::vector<std::complex<double>> tp(to.size()), fp(static_cast<std::size_t>(U.rows()));
  for (std::size_t m = 0; m < tp.size(); ++m) tp[m] = to_clock(to.quanta[m]);
  for (std::size_t k = 0; k < fp.size(); ++k) fp[k] = from_clock(from.quanta[k]);
  return detail::assemble_evolution(U, tp, fp);
}

/// log of det of the leading N x N block; F = |det|^2.
inline LogDeterminant zero_temperature_determinant(const ComplexMatrix& O, long N) {
  if (N < 1 || N > O.rows()) throw DomainError("survival needs 1 <= N <= K");
  return log_determinant(O.topLeftCorner(N, N));
}

inline double survival_probability_zero_T(const ComplexMatrix& O, long N) {
  return zero_temperature_determinant(O, N).probability();
}

/// (1 - n_k) delta_kl + n_k O_kl.
inline ComplexMatrix thermal_matrix(const ComplexMatrix& O, const ThermalState& thermal) {
  if (static_cast<Eigen::Index>(thermal.modes()) != O.rows()) {
    throw NumericalError("occupation vector and evolution matrix sizes disagree");
  }
  ComplexMatrix D = O;
  for (Eigen::Index k = 0; k < D.rows(); ++k) {
    const double n = thermal.occupations[k];
    D.row(k) *= n;
    D(k, k) += 1.0 - n;
  }
  return D;
}

inline LogDeterminant finite_temperature_determinant(const ComplexMatrix& O, const ThermalState& thermal) {
  return log_determinant(thermal_matrix(O, thermal));
}

inline double survival_probability_finite_T(const OverlapMatrix& U, const Spectrum& from,
                                            const Spectrum& to, const ThermalState& thermal,
                                            double t) {
  if (static_cast<Eigen::Index>(thermal.modes()) != U.rows()) {
    throw NumericalError("thermal state and overlap matrix row counts disagree");
  }
  return finite_temperature_determinant(evolution_matrix(U, from, to, t), thermal).probability();
}

enum class RevivalClass { true_revival, quasi_revival, none };

inline const char* to_string(RevivalClass c) {
  switch (c) {
    case RevivalClass::true_revival: return "true revival";
    case RevivalClass::quasi_revival: return "quasi revival";
    default: return "none";
  }
}

struct PhaseDiagnostics {
  std::vector<std::complex<double>> diagonal;
  double max_offdiag = 0.0;
  double max_modulus_error = 0.0;
  double max_phase = 0.0;  // largest |arg| of the diagonal entries, in (-pi, pi]
  RevivalClass label = RevivalClass::none;
};

/// Revival taxonomy of the leading n x n block of `O`.
inline PhaseDiagnostics phase_diagnostics(const ComplexMatrix& O, long n, double tol) {
  if (n < 1 || n > O.rows()) throw DomainError("phase diagnostics need 1 <= N <= K");
  PhaseDiagnostics d;
  for (long k = 0; k < n; ++k) {
    const auto z = O(k, k);
    d.diagonal.push_back(z);
    d.max_modulus_error = std::max(d.max_modulus_error, std::abs(std::abs(z) - 1.0));
    d.max_phase = std::max(d.max_phase, std::abs(std::arg(z)));
    for (long l = 0; l < n; ++l) {
      if (l != k) d.max_offdiag = std::max(d.max_offdiag, std::abs(O(k, l)));
    }
  }
  if (d.max_offdiag < tol && d.max_modulus_error < tol) {
    d.label = d.max_phase < tol ? RevivalClass::true_revival : RevivalClass::quasi_revival;
  }
  return d;
}

inline constexpr double revival_tolerance_zero_T = 1e-6;
inline constexpr double revival_tolerance_finite_T = 1e-4;

/// Sample times in units of t_r: `points` uniform samples over [0, tau_max], optionally
/// merged with every exact multiple of 1/4.
inline std::vector<double> time_grid(double tau_max, long points, bool include_quarters) {
  if (!(tau_max >= 0.0)) throw DomainError("time grid needs t_max >= 0");
  if (points < 1) throw DomainError("time grid needs at least one point");
  std::vector<double> tau;
  if (points == 1) {
    tau.push_back(0.0);
  } else {
    for (long i = 0; i < points; ++i) tau.push_back(tau_max * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  if (include_quarters) {
    for (long p = 0; 0.25 * static_cast<double>(p) <= tau_max; ++p) tau.push_back(0.25 * static_cast<double>(p));
  }
  std::sort(tau.begin(), tau.end());
  std::vector<double> out;
  for (double t : tau) {
    if (!out.empty() && std::abs(t - out.back()) <= 1e-12 * std::max(1.0, tau_max)) {
      // keep the exact quarter value when a uniform sample lands on it
      if (std::fmod(4.0 * t, 1.0) == 0.0) out.back() = t;
      continue;
    }
    out.push_back(t);
  }
  return out;
}

/// Everything the dynamics needs for one quench, shared immutably across time points.
struct QuenchModel {
  std::string name;
  OverlapMatrix U;   // K x M
  Spectrum initial;  // at least K entries
  Spectrum final;    // M entries
  double revival_time = 0.0;
  double fermi_temperature = 0.0;
  long N = 0;
  bool commensurate = true;  // all energies integer multiples of the final E_1

  /// Model restricted to the first K initial states.
  QuenchModel leading_rows(long K) const {
    QuenchModel m = *this;
    m.U.entries = U.entries.topRows(K);
    m.U.completeness_defect.assign(U.completeness_defect.begin(), U.completeness_defect.begin() + K);
    m.initial = initial.head(static_cast<std::size_t>(K));
    return m;
  }
};

struct EvolutionSnapshot {
  double t = 0.0;
  double tau = 0.0;  // t / t_r
  double F = 1.0;
  double log_F = 0.0;
  std::complex<double> amplitude{1.0, 0.0};
  PhaseDiagnostics diagnostics;
  ComplexMatrix O;  // filled only when requested
};

struct SweepOptions {
  bool keep_matrices = false;
  double tolerance = 0.0;  // 0 selects the temperature default
};

/// Survival probability and revival diagnostics at each tau (strictly increasing).
/// A thermal state with beta = inf selects the zero-temperature Slater determinant.
inline std::vector<EvolutionSnapshot> survival_sweep(const QuenchModel& model, const ThermalState& thermal,
                                                     const std::vector<double>& tau_grid,
                                                     const SweepOptions& options = {}) {
  for (std::size_t i = 1; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > tau_grid[i - 1])) throw DomainError("time grid must be strictly increasing");
  }
  const bool zero_T = thermal.zero_temperature();
  if (!zero_T && static_cast<Eigen::Index>(thermal.modes()) != model.U.rows()) {
    throw NumericalError("thermal state and overlap matrix row counts disagree");
  }
  const double tol = options.tolerance > 0.0
                         ? options.tolerance
                         : (zero_T ? revival_tolerance_zero_T : revival_tolerance_finite_T);
  std::vector<EvolutionSnapshot> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    EvolutionSnapshot s;
    s.tau = tau;
    s.t = tau * model.revival_time;
    const ComplexMatrix O = evolution_matrix_at(model.U, model.initial, model.final, tau);
    LogDeterminant det;
    if (zero_T) {
      det = zero_temperature_determinant(O, thermal.N);
      s.diagnostics = phase_diagnostics(O, thermal.N, tol);
    } else {
      const ComplexMatrix D = thermal_matrix(O, thermal);
      det = log_determinant(D);
      s.diagnostics = phase_diagnostics(D, D.rows(), tol);
    }
    s.log_F = det.log_probability();
    s.F = det.probability();
    s.amplitude = det.value();
    if (options.keep_matrices) s.O = O;
    out.push_back(std::move(s));
  }
  return out;
}

/// <W> from the initial decay of the dynamical overlap, Im d/dt ln det O at t = 0.
/// The work distribution has an infinite variance (P ~ W^{-5/2}), so the central difference
/// D(h) carries error terms in powers of sqrt(h). A Richardson tableau over the steps
/// h, h/4, h/16, ... removes the sqrt(h), h, h^{3/2}, ... terms in turn.
struct InitialDecay {
  double plain = 0.0;         // central difference at step h
  double extrapolated = 0.0;  // top of the Richardson tableau
  double step = 0.0;
  std::vector<double> differences;  // D(h / 4^j)
};

/// Base step for the tableau: 0.06 / E_F with E_F the highest final level of the Fermi sea.
/// The asymptotic sqrt(h) expansion needs h E_F << 1 and (h / 4^levels) E_M >> 1.
inline double initial_decay_step(const QuenchModel& model, long N) {
  const double e_fermi = model.final.energy(static_cast<std::size_t>(N - 1));
  return 0.06 / (e_fermi * model.revival_time);
}

inline InitialDecay initial_decay_work(const QuenchModel& model, long N, double step_over_tr = 0.0,
                                       int levels = 5) {
  if (levels < 1) throw DomainError("initial decay needs at least one step");
  if (N < 1 || N > model.U.rows()) throw DomainError("initial decay needs 1 <= N <= K");
  if (step_over_tr <= 0.0) step_over_tr = initial_decay_step(model, N);
  const auto slope = [&](double tau_h) {
    const auto plus = zero_temperature_determinant(
        evolution_matrix_at(model.U, model.initial, model.final, tau_h), N);
    const auto minus = zero_temperature_determinant(
        evolution_matrix_at(model.U, model.initial, model.final, -tau_h), N);
    const double dphase = std::arg(plus.phase * std::conj(minus.phase));
    return dphase / (2.0 * tau_h * model.revival_time);
  };
  InitialDecay d;
  d.step = step_over_tr * model.revival_time;
  double tau_h = step_over_tr;
  for (int j = 0; j < levels; ++j, tau_h *= 0.25) d.differences.push_back(slope(tau_h));
  // T[j][i] = (2^i T[j][i-1] - T[j-1][i-1]) / (2^i - 1) removes the h^{i/2} term
  std::vector<double> prev = d.differences;
  for (int i = 1; i < levels; ++i) {
    const double f = std::ldexp(1.0, i);
    std::vector<double> next;
    for (std::size_t j = 1; j < prev.size(); ++j) next.push_back((f * prev[j] - prev[j - 1]) / (f - 1.0));
    prev = std::move(next);
  }
  d.extrapolated = prev.front();
  d.plain = d.differences.front();
  return d;
}

}  // namespace susyq
