#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "susyq/errors.hpp"
#include "susyq/geometry.hpp"
#include "susyq/overlap.hpp"

namespace susyq {

/// Sudden expansion of the box from width L_initial to L_final.
struct ExpansionSpec {
  double L_initial = 3.9;
  double L_final = 4.0;
  long N = 30;
  long K = 30;
  long M = 0;  // 0 selects the adaptive truncation

  void validate() const {
    if (!(L_initial > 0.0) || !(L_final > 0.0) || !std::isfinite(L_initial) || !std::isfinite(L_final)) {
      throw DomainError("box widths must be positive and finite");
    }
    if (L_initial > L_final) throw DomainError("only expansions L_initial <= L_final are supported");
    if (N < 1 || K < N) throw DomainError("expansion needs N >= 1 and K >= N");
    if (M != 0 && M < K) throw DomainError("expansion needs M >= K");
  }
};

namespace detail {

// integral of cos(w x) over (-a, a) divided by 2, i.e. sin(w a) / w, with its w -> 0 limit
inline double half_cos_integral(double w, double a, double resonance) {
  if (std::abs(w) < resonance) return a;
  return std::sin(w * a) / w;
}

}  // namespace detail

/// <psi^{L'}_k | psi^{L}_l>, the initial state living on (-L'/2, L'/2) and zero outside.
inline double box_box_overlap(long k, long l, double L_prime, double L) {
  if (k < 1 || l < 1) throw DomainError("box state index must be >= 1");
  if ((k - l) % 2 != 0) return 0.0;
  constexpr double pi = std::numbers::pi;
  const double a = 0.5 * L_prime;
  const double resonance = 1e-10 * pi / L;
  // frequencies difference written over a common denominator to avoid cancellation
  const double w_minus = pi * (static_cast<double>(k) * L - static_cast<double>(l) * L_prime) / (L_prime * L);
  const double w_plus = pi * (static_cast<double>(k) * L + static_cast<double>(l) * L_prime) / (L_prime * L);
  const double dm = detail::half_cos_integral(w_minus, a, resonance);
  const double dp = detail::half_cos_integral(w_plus, a, resonance);
  const double norm = 2.0 / std::sqrt(L_prime * L);
  const double value = (k % 2 == 1) ? dm + dp : dm - dp;
  return norm * value;
}

inline OverlapMatrix box_box_overlap_matrix(double L_prime, double L, long K, long M) {
  OverlapMatrix u;
  u.from_level = 1;
  u.to_level = 1;
  u.entries.resize(K, M);
  for (long l = 1; l <= M; ++l) {
    for (long k = 1; k <= K; ++k) u.entries(k - 1, l - 1) = box_box_overlap(k, l, L_prime, L);
  }
  u.completeness_defect = row_defects(u.entries);
  return u;
}

inline OverlapMatrix talbot_overlap_matrix(const ExpansionSpec& spec, std::span<const double> weights,
                                           const TruncationPolicy& policy = {}) {
  spec.validate();
  TruncationPolicy p = policy;
  if (spec.M > 0) p.fixed_columns = spec.M;
  auto build = [&spec](long M) {
    return box_box_overlap_matrix(spec.L_initial, spec.L_final, spec.K, std::max(M, spec.K));
  };
  return adaptive_overlap(build, spec.K, weights, p);
}

}  // namespace susyq
