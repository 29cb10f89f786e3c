#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "susyq/determinant.hpp"
#include "susyq/dynamics.hpp"
#include "susyq/errors.hpp"
#include "susyq/geometry.hpp"
#include "susyq/thermal.hpp"

namespace susyq {

// ---------------------------------------------------------------------------------------------
// Closed forms, all in integer quanta of E_1 before the final multiply.

/// Delta E_0 / E_1 = (alpha - 1)(N^2 + alpha N).
inline std::int64_t ground_state_shift_quanta(int alpha, long N) {
  if (alpha < 1 || N < 1) throw DomainError("work closed forms need alpha >= 1 and N >= 1");
  return static_cast<std::int64_t>(alpha - 1) * (static_cast<std::int64_t>(N) * N + static_cast<std::int64_t>(alpha) * N);
}

inline double ground_state_energy_shift(int alpha, long N, const BoxGeometry& geom) {
  return static_cast<double>(ground_state_shift_quanta(alpha, N)) * geom.ground_energy();
}

/// <W> / E_1 = N (N + 1)(alpha^2 - alpha).
inline std::int64_t average_work_quanta(int alpha, long N) {
  if (alpha < 1 || N < 1) throw DomainError("work closed forms need alpha >= 1 and N >= 1");
  return static_cast<std::int64_t>(N) * (N + 1) * (static_cast<std::int64_t>(alpha) * alpha - alpha);
}

inline double average_work(int alpha, long N, const BoxGeometry& geom) {
  return static_cast<double>(average_work_quanta(alpha, N)) * geom.ground_energy();
}

/// <W_irr> / E_1 = N^2 (alpha - 1)^2.
inline std::int64_t irreversible_work_quanta(int alpha, long N) {
  if (alpha < 1 || N < 1) throw DomainError("work closed forms need alpha >= 1 and N >= 1");
  return static_cast<std::int64_t>(N) * N * (alpha - 1) * (alpha - 1);
}

inline double irreversible_work(int alpha, long N, const BoxGeometry& geom) {
  return static_cast<double>(irreversible_work_quanta(alpha, N)) * geom.ground_energy();
}

struct WorkScanRow {
  long N = 0;
  int alpha = 1;
  double average = 0.0;
  double irreversible = 0.0;
  double ground_shift = 0.0;
};

inline std::vector<WorkScanRow> work_scan(std::span<const int> alphas, long N_min, long N_max,
                                          const BoxGeometry& geom) {
  if (N_min < 1 || N_max < N_min) throw DomainError("work scan needs 1 <= N_min <= N_max");
  std::vector<WorkScanRow> rows;
  for (int a : alphas) {
    for (long n = N_min; n <= N_max; ++n) {
      rows.push_back({n, a, average_work(a, n, geom), irreversible_work(a, n, geom),
                      ground_state_energy_shift(a, n, geom)});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------------------------
// Many-body amplitudes.

namespace detail {

inline void require_distinct(std::vector<long> s, const char* what) {
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
    throw DomainError(std::string("duplicate index in ") + what);
  }
}

// small determinants without allocation for r <= 3
inline double small_det(const Eigen::MatrixXd& B, const int* rows, const int* cols, int r) {
  auto b = [&](int i, int j) { return B(rows[i], cols[j]); };
  switch (r) {
    case 0: return 1.0;
    case 1: return b(0, 0);
    case 2: return b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0);
    case 3:
      return b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
             b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
             b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    default: {
      Eigen::MatrixXd m(r, r);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) m(i, j) = b(i, j);
      return m.partialPivLu().determinant();
    }
  }
}

// advances a sorted r-combination of {0..n-1}; false after the last one
inline bool next_combination(std::vector<int>& c, int n) {
  const int r = static_cast<int>(c.size());
  int i = r - 1;
  while (i >= 0 && c[i] == n - r + i) --i;
  if (i < 0) return false;
  ++c[i];
  for (int j = i + 1; j < r; ++j) c[j] = c[j - 1] + 1;
  return true;
}

inline double binomial(long n, long r) {
  if (r < 0 || r > n) return 0.0;
  double b = 1.0;
  for (long i = 1; i <= r; ++i) b = b * static_cast<double>(n - r + i) / static_cast<double>(i);
  return b;
}

}  // namespace detail

/// det U[initial_set, final_set] with 1-based index sets.
inline double many_body_overlap(const OverlapMatrix& U, const std::vector<long>& initial_set,
                                const std::vector<long>& final_set) {
  if (initial_set.size() != final_set.size()) throw DomainError("index sets must have equal size");
  detail::require_distinct(initial_set, "initial set");
  detail::require_distinct(final_set, "final set");
  const auto n = static_cast<Eigen::Index>(initial_set.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const long k = initial_set[i], m = final_set[j];
      if (k < 1 || k > U.rows() || m < 1 || m > U.cols()) throw DomainError("index outside the overlap matrix");
      sub(i, j) = U.entries(k - 1, m - 1);
    }
  }
  if (n == 0) return 1.0;
  return sub.partialPivLu().determinant();
}

// ---------------------------------------------------------------------------------------------
// Work spectrum containers.

struct ExcitationRecord {
  std::vector<int> holes;      // 1-based, removed from the final ground set {1..N}
  std::vector<int> particles;  // 1-based, > N
  int order = 0;
  std::int64_t final_quanta = 0;
  double W = 0.0;
  double W_over_E1 = 0.0;
  double P = 0.0;

  std::vector<int> final_occupation(long N) const {
    std::vector<int> f;
    for (int i = 1; i <= N; ++i) {
      if (!std::binary_search(holes.begin(), holes.end(), i)) f.push_back(i);
    }
    f.insert(f.end(), particles.begin(), particles.end());
    return f;
  }
};

/// Records merged by work value. `key` is W/E_1 itself when the spectra are commensurate,
/// otherwise W/E_1 in units of 1e-9.
struct WorkBin {
  std::int64_t key = 0;
  double W = 0.0;
  double W_over_E1 = 0.0;
  double P = 0.0;
  long count = 0;
};

struct OrderSummary {
  int order = 0;
  double probability = 0.0;       // exact sum over every set within the M window
  double first_moment = 0.0;      // exact sum of P W over the same sets
  double enumerated_probability = 0.0;
  long records = 0;
  long candidates = 0;
  long particle_window = 0;
};

struct WorkTruncation {
  int max_order = 0;
  long M = 0;
  double threshold = 0.0;
};

struct WorkSpectrum {
  std::vector<ExcitationRecord> records;  // sorted by W, zero temperature only
  std::vector<WorkBin> bins;              // sorted by W
  std::vector<OrderSummary> orders;
  double total_probability = 0.0;
  double first_moment = 0.0;
  double enumerated_probability = 0.0;
  double enumerated_first_moment = 0.0;
  double dropped_probability = 0.0;  // records below threshold
  double window_probability = 1.0;   // det(U_I U_I^T): everything the M columns can hold
  double ground_ground_probability = 0.0;
  bool commensurate = true;
  WorkTruncation truncation;

  long bins_above(double p) const {
    return std::count_if(bins.begin(), bins.end(), [p](const WorkBin& b) { return b.P > p; });
  }
};

struct WpdOptions {
  int max_order = 3;
  double threshold = 1e-12;
  // particles for order r are drawn from the first window[r] levels above N; 0 means all of M
  std::array<long, 8> windows{0, 0, 0, 24, 12, 10, 10, 10};
  long window_order2 = 0;  // 0 selects 4 N
  double candidate_cap = 5e7;
};

struct FiniteTOptions {
  int max_order_initial = 2;
  int max_order_final = 3;
  double threshold = 1e-12;
  double initial_weight_cutoff = 1e-12;  // relative to the most probable configuration
  long max_N = 10;                       // larger N needs allow_large_N
  bool allow_large_N = false;
  WpdOptions final_windows;
};

namespace detail {

inline long particle_window(const WpdOptions& o, int r, long N, long available) {
  long w = 0;
  if (r == 2) {
    w = o.window_order2 > 0 ? o.window_order2 : 4 * N;
  } else if (r < static_cast<int>(o.windows.size())) {
    w = o.windows[r];
  } else {
    w = o.windows.back();
  }
  if (w <= 0 || w > available) w = available;
  return w;
}

inline double energy_of(const Spectrum& s, std::int64_t quanta) { return s.unit * static_cast<double>(quanta); }

struct WorkKeyer {
  bool commensurate;
  double unit_final;
  double ratio;  // unit_initial / unit_final

  double over_e1(std::int64_t qf, std::int64_t qi) const {
    if (commensurate) return static_cast<double>(qf - qi);
    return static_cast<double>(qf) - ratio * static_cast<double>(qi);
  }
  std::int64_t key(std::int64_t qf, std::int64_t qi) const {
    if (commensurate) return qf - qi;
    return std::llround(over_e1(qf, qi) * 1e9);
  }
};

inline WorkKeyer keyer_for(const QuenchModel& model) {
  const bool comm = model.commensurate && model.initial.unit == model.final.unit;
  return {comm, model.final.unit, model.initial.unit / model.final.unit};
}

/// Amplitudes det U[I, F] for final sets F = ground \ H + P, factored through a well-
/// conditioned reference set F0: det U[I,F] = det U[I,F0] * det B[F0 \ F, F \ F0],
/// B = U[I,F0]^{-1} U[I,:] (up to sign).
class AmplitudeEngine {
 public:
  AmplitudeEngine(const Eigen::MatrixXd& rows, long N) : N_(N), in_f0_(rows.cols(), -1) {
    const Eigen::Index M = rows.cols();
    // reference columns: the final ground set when it is well conditioned, otherwise
    // a column-pivoted selection among the low-lying levels
    std::vector<int> f0(static_cast<std::size_t>(N));
    std::iota(f0.begin(), f0.end(), 0);
    Eigen::MatrixXd G = rows.leftCols(N);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(G);
    double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot > 1e-8)) {
      const Eigen::Index span = std::min<Eigen::Index>(M, 4 * N + 40);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rows.leftCols(span));
      for (long j = 0; j < N; ++j) f0[j] = static_cast<int>(qr.colsPermutation().indices()[j]);
      std::sort(f0.begin(), f0.end());
      for (long j = 0; j < N; ++j) G.col(j) = rows.col(f0[j]);
      lu.compute(G);
      min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    }
    if (!(min_pivot > 0.0)) {
      singular_ = true;
      return;
    }
    f0_ = f0;
    for (long j = 0; j < N; ++j) in_f0_[f0[j]] = static_cast<int>(j);
    det0_ = lu.determinant();
    B_ = lu.solve(rows);
    for (long j = 0; j < N; ++j) {
      if (f0[j] >= N) f0_not_ground_.push_back(static_cast<int>(j));
    }
    for (long g = 0; g < N; ++g) {
      if (in_f0_[g] < 0) ground_not_f0_.push_back(static_cast<int>(g));
    }
    ground_reference_ = f0_not_ground_.empty();
  }

  bool singular() const { return singular_; }
  double reference_determinant() const { return det0_; }

  /// |det U[I, ground \ H + P]|^2, H and P 0-based.
  double probability(const int* H, int r, const int* P) {
    if (singular_) return 0.0;
    if (ground_reference_) {
      const double d = small_det(B_, H, P, r);
      return det0_ * det0_ * d * d;
    }
    rows_.clear();
    cols_.clear();
    // F0 \ F: reference columns that are holes, and reference particles not chosen
    for (int i = 0; i < r; ++i) {
      if (in_f0_[H[i]] >= 0) rows_.push_back(in_f0_[H[i]]);
    }
    for (int j : f0_not_ground_) {
      if (std::find(P, P + r, f0_[j]) == P + r) rows_.push_back(j);
    }
    // F \ F0: ground levels missing from the reference that are kept, and new particles
    for (int g : ground_not_f0_) {
      if (std::find(H, H + r, g) == H + r) cols_.push_back(g);
    }
    for (int i = 0; i < r; ++i) {
      if (in_f0_[P[i]] < 0) cols_.push_back(P[i]);
    }
    if (rows_.size() != cols_.size()) return 0.0;
    const double d = small_det(B_, rows_.data(), cols_.data(), static_cast<int>(rows_.size()));
    return det0_ * det0_ * d * d;
  }

 private:
  long N_;
  std::vector<int> in_f0_;
  std::vector<int> f0_;
  std::vector<int> f0_not_ground_;
  std::vector<int> ground_not_f0_;
  Eigen::MatrixXd B_;
  double det0_ = 0.0;
  bool singular_ = false;
  bool ground_reference_ = true;
  std::vector<int> rows_, cols_;
};

// Visits every (H, P) with |H| = |P| = r, H within the ground set and P within `window`
// levels above N. f(H, P) receives 0-based index arrays.
template <class F>
void for_each_excitation(long N, int r, long window, F&& f) {
  if (r == 0) {
    f(static_cast<const int*>(nullptr), static_cast<const int*>(nullptr));
    return;
  }
  if (r > N || r > window) return;
  std::vector<int> h(r), p(r), ps(r);
  std::iota(h.begin(), h.end(), 0);
  do {
    std::iota(p.begin(), p.end(), 0);
    do {
      for (int i = 0; i < r; ++i) ps[i] = p[i] + static_cast<int>(N);
      f(h.data(), ps.data());
    } while (next_combination(p, static_cast<int>(window)));
  } while (next_combination(h, static_cast<int>(N)));
}

inline void sort_and_bin(WorkSpectrum& ws, const std::map<std::int64_t, WorkBin>& bins) {
  ws.bins.clear();
  for (const auto& [k, b] : bins) ws.bins.push_back(b);
  std::sort(ws.bins.begin(), ws.bins.end(), [](const WorkBin& a, const WorkBin& b) {
    return a.W_over_E1 < b.W_over_E1 || (a.W_over_E1 == b.W_over_E1 && a.key < b.key);
  });
}

// elementary symmetric polynomials e_0..e_R of v, optionally skipping one entry
inline std::vector<double> elementary_symmetric(const Eigen::VectorXd& v, int R, Eigen::Index skip = -1) {
  std::vector<double> e(static_cast<std::size_t>(R + 1), 0.0);
  e[0] = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i == skip) continue;
    for (int r = R; r >= 1; --r) e[r] += v[i] * e[r - 1];
  }
  return e;
}

}  // namespace detail

/// Exact per-order probability and first-moment sums over all final sets within the M
/// columns (Cauchy-Binet). Entry r covers the sets with r particles above N.
struct OrderSums {
  std::vector<double> probability;
  std::vector<double> first_moment;
  double window_probability = 0.0;
};

inline OrderSums exact_order_sums(const QuenchModel& model, long N) {
  const Eigen::MatrixXd UI = model.U.entries.topRows(N);
  const Eigen::Index M = UI.cols();
  if (M < N) throw DomainError("order sums need M >= N");
  const Eigen::MatrixXd G = UI.leftCols(N);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(G);
  const double detG = lu.determinant();
  OrderSums out;
  out.window_probability = (UI * UI.transpose()).eval().partialPivLu().determinant();
  out.probability.assign(static_cast<std::size_t>(N + 1), 0.0);
  out.first_moment.assign(static_cast<std::size_t>(N + 1), 0.0);
  if (detG == 0.0) return out;

  const Eigen::MatrixXd Bp = lu.solve(UI.rightCols(M - N));
  Eigen::VectorXd eps_p(M - N), eps_h(N);
  for (Eigen::Index j = 0; j < M - N; ++j) eps_p[j] = model.final.energy(static_cast<std::size_t>(N + j));
  for (Eigen::Index j = 0; j < N; ++j) eps_h[j] = model.final.energy(static_cast<std::size_t>(j));
  double e_init = 0.0;
  for (long k = 0; k < N; ++k) e_init += model.initial.energy(static_cast<std::size_t>(k));
  const double W0 = eps_h.sum() - e_init;

  const Eigen::MatrixXd C = Bp * Bp.transpose();
  const Eigen::MatrixXd X = Bp * eps_p.asDiagonal() * Bp.transpose() - eps_h.asDiagonal() * C;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd& V = es.eigenvectors();
  const Eigen::VectorXd xt = (V.transpose() * X * V).diagonal();

  const int R = static_cast<int>(N);
  const auto e_all = detail::elementary_symmetric(lam, R);
  const double g2 = detG * detG;
  for (int r = 0; r <= R; ++r) {
    out.probability[r] = g2 * e_all[r];
    out.first_moment[r] = g2 * W0 * e_all[r];
  }
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const auto e_wo = detail::elementary_symmetric(lam, R - 1, i);
    for (int r = 1; r <= R; ++r) out.first_moment[r] += g2 * xt[i] * e_wo[r - 1];
  }
  return out;
}

/// Zero-temperature work distribution: every final set within `max_order` particle-hole
/// excitations of the final ground set, with particle windows per order.
inline WorkSpectrum enumerate_final_states(const QuenchModel& model, long N, const WpdOptions& opt = {}) {
  if (N < 1 || N > model.U.rows()) throw DomainError("work distribution needs 1 <= N <= K");
  const long M = model.U.cols();
  if (M <= N) throw DomainError("work distribution needs M > N");
  if (opt.max_order < 0 || opt.max_order > 7) throw DomainError("max_order must be in 0..7");
  if (!(opt.threshold >= 0.0)) throw DomainError("threshold must be >= 0");

  WorkSpectrum ws;
  ws.truncation = {opt.max_order, M, opt.threshold};
  const auto keyer = detail::keyer_for(model);
  ws.commensurate = keyer.commensurate;

  const long available = M - N;
  double candidates_total = 0.0;
  for (int r = 0; r <= opt.max_order; ++r) {
    const long w = detail::particle_window(opt, r, N, available);
    candidates_total += detail::binomial(N, r) * detail::binomial(w, r);
  }
  if (candidates_total > opt.candidate_cap) {
    throw CombinatorialCapError("enumeration would visit " + std::to_string(candidates_total) +
                                " candidate sets, above the cap " + std::to_string(opt.candidate_cap));
  }

  const OrderSums sums = exact_order_sums(model, N);
  ws.window_probability = sums.window_probability;

  std::int64_t q_init = 0, q_ground = 0;
  for (long k = 0; k < N; ++k) {
    q_init += model.initial.quanta[k];
    q_ground += model.final.quanta[k];
  }
  const double e_init = detail::energy_of(model.initial, q_init);

  detail::AmplitudeEngine engine(model.U.entries.topRows(N), N);
  std::map<std::int64_t, WorkBin> bins;
  for (int r = 0; r <= opt.max_order; ++r) {
    OrderSummary os;
    os.order = r;
    os.probability = r <= N ? sums.probability[r] : 0.0;
    os.first_moment = r <= N ? sums.first_moment[r] : 0.0;
    os.particle_window = detail::particle_window(opt, r, N, available);
    detail::for_each_excitation(N, r, os.particle_window, [&](const int* H, const int* P) {
      ++os.candidates;
      const double p = engine.probability(H, r, P);
      if (p < opt.threshold) {
        ws.dropped_probability += p;
        return;
      }
      ExcitationRecord rec;
      rec.order = r;
      std::int64_t qf = q_ground;
      for (int i = 0; i < r; ++i) {
        rec.holes.push_back(H[i] + 1);
        rec.particles.push_back(P[i] + 1);
        qf += model.final.quanta[P[i]] - model.final.quanta[H[i]];
      }
      rec.final_quanta = qf;
      rec.W = detail::energy_of(model.final, qf) - e_init;
      rec.W_over_E1 = keyer.over_e1(qf, q_init);
      rec.P = p;
      os.enumerated_probability += p;
      ++os.records;
      ws.enumerated_probability += p;
      ws.enumerated_first_moment += p * rec.W;
      auto& b = bins[keyer.key(qf, q_init)];
      b.key = keyer.key(qf, q_init);
      b.W = rec.W;
      b.W_over_E1 = rec.W_over_E1;
      b.P += p;
      ++b.count;
      if (r == 0) ws.ground_ground_probability = p;
      ws.records.push_back(std::move(rec));
    });
    ws.total_probability += os.probability;
    ws.first_moment += os.first_moment;
    ws.orders.push_back(os);
  }
  std::sort(ws.records.begin(), ws.records.end(), [](const ExcitationRecord& a, const ExcitationRecord& b) {
    if (a.W_over_E1 != b.W_over_E1) return a.W_over_E1 < b.W_over_E1;
    if (a.holes != b.holes) return a.holes < b.holes;
    return a.particles < b.particles;
  });
  detail::sort_and_bin(ws, bins);
  return ws;
}

/// Finite-temperature work distribution: thermal configurations of the initial levels
/// (up to `max_order_initial` excitations of the Fermi sea, weighted by occupation products
/// renormalized over the enumerated set) times final sets as in enumerate_final_states.
inline WorkSpectrum wpd_finite_T(const QuenchModel& model, const ThermalState& thermal,
                                 const FiniteTOptions& opt = {}) {
  const long N = thermal.N;
  if (thermal.zero_temperature()) {
    WpdOptions o = opt.final_windows;
    o.max_order = opt.max_order_final;
    o.threshold = opt.threshold;
    return enumerate_final_states(model, N, o);
  }
  if (N > opt.max_N && !opt.allow_large_N) {
    throw DomainError("finite-temperature work distribution limited to N <= " + std::to_string(opt.max_N) +
                      " unless explicitly enabled");
  }
  const long K = static_cast<long>(thermal.modes());
  if (K > model.U.rows()) throw NumericalError("thermal modes exceed the overlap matrix rows");
  const long M = model.U.cols();
  const long available = M - N;
  const auto keyer = detail::keyer_for(model);

  // initial configurations with their log weights relative to the Fermi sea
  struct InitialConfig {
    std::vector<int> holes, particles;
    double log_weight = 0.0;
  };
  std::vector<InitialConfig> configs;
  const auto& n = thermal.occupations;
  auto log_odds = [&](int k) { return std::log(n[k]) - std::log1p(-n[k]); };
  for (int r = 0; r <= opt.max_order_initial; ++r) {
    detail::for_each_excitation(N, r, K - N, [&](const int* H, const int* P) {
      InitialConfig c;
      for (int i = 0; i < r; ++i) {
        c.holes.push_back(H[i]);
        c.particles.push_back(P[i]);
        c.log_weight += log_odds(P[i]) - log_odds(H[i]);
      }
      configs.push_back(std::move(c));
    });
  }
  double max_lw = -1e300;
  for (const auto& c : configs) max_lw = std::max(max_lw, c.log_weight);
  const double cutoff = max_lw + std::log(opt.initial_weight_cutoff);
  double norm = 0.0;
  for (const auto& c : configs) {
    if (c.log_weight >= cutoff) norm += std::exp(c.log_weight - max_lw);
  }

  double candidates_total = 0.0;
  long kept = 0;
  for (const auto& c : configs) kept += c.log_weight >= cutoff;
  for (int r = 0; r <= opt.max_order_final; ++r) {
    const long w = detail::particle_window(opt.final_windows, r, N, available);
    candidates_total += static_cast<double>(kept) * detail::binomial(N, r) * detail::binomial(w, r);
  }
  if (candidates_total > opt.final_windows.candidate_cap) {
    throw CombinatorialCapError("finite-temperature enumeration would visit " + std::to_string(candidates_total) +
                                " candidate sets, above the cap " +
                                std::to_string(opt.final_windows.candidate_cap));
  }

  WorkSpectrum ws;
  ws.commensurate = keyer.commensurate;
  ws.truncation = {opt.max_order_final, M, opt.threshold};
  ws.window_probability = 0.0;
  std::map<std::int64_t, WorkBin> bins;
  std::vector<OrderSummary> orders(static_cast<std::size_t>(opt.max_order_final + 1));
  for (int r = 0; r <= opt.max_order_final; ++r) {
    orders[r].order = r;
    orders[r].particle_window = detail::particle_window(opt.final_windows, r, N, available);
  }

  std::int64_t q_ground = 0;
  for (long k = 0; k < N; ++k) q_ground += model.final.quanta[k];

  for (const auto& c : configs) {
    if (c.log_weight < cutoff) continue;
    const double weight = std::exp(c.log_weight - max_lw) / norm;
    std::vector<int> rows;
    for (int k = 0; k < N; ++k) {
      if (std::find(c.holes.begin(), c.holes.end(), k) == c.holes.end()) rows.push_back(k);
    }
    rows.insert(rows.end(), c.particles.begin(), c.particles.end());
    std::sort(rows.begin(), rows.end());
    Eigen::MatrixXd UI(N, M);
    std::int64_t q_init = 0;
    for (long i = 0; i < N; ++i) {
      UI.row(i) = model.U.entries.row(rows[i]);
      q_init += model.initial.quanta[rows[i]];
    }
    ws.window_probability += weight * (UI * UI.transpose()).eval().partialPivLu().determinant();
    const double e_init = detail::energy_of(model.initial, q_init);
    detail::AmplitudeEngine engine(UI, N);
    for (int r = 0; r <= opt.max_order_final; ++r) {
      auto& os = orders[r];
      detail::for_each_excitation(N, r, os.particle_window, [&](const int* H, const int* P) {
        ++os.candidates;
        const double p = weight * engine.probability(H, r, P);
        if (p < opt.threshold) {
          ws.dropped_probability += p;
          return;
        }
        std::int64_t qf = q_ground;
        for (int i = 0; i < r; ++i) qf += model.final.quanta[P[i]] - model.final.quanta[H[i]];
        const double W = detail::energy_of(model.final, qf) - e_init;
        os.enumerated_probability += p;
        ++os.records;
        ws.enumerated_probability += p;
        ws.enumerated_first_moment += p * W;
        const auto key = keyer.key(qf, q_init);
        auto& b = bins[key];
        b.key = key;
        b.W = W;
        b.W_over_E1 = keyer.over_e1(qf, q_init);
        b.P += p;
        ++b.count;
      });
    }
  }
  ws.orders = orders;
  ws.total_probability = ws.enumerated_probability;
  ws.first_moment = ws.enumerated_first_moment;
  detail::sort_and_bin(ws, bins);
  return ws;
}

}  // namespace susyq
