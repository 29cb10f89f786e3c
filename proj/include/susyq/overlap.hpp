#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "susyq/errors.hpp"
#include "susyq/quadrature.hpp"
#include "susyq/spectral_basis.hpp"

namespace susyq {

/// U[k][m] = <psi^(from)_k | psi^(to)_m> for k < rows, m < cols (0-based storage of 1-based states).
struct OverlapMatrix {
  int from_level = 1;
  int to_level = 1;
  Eigen::MatrixXd entries;
  std::vector<double> completeness_defect;
  int quadrature_order = 0;  // 0 when entries come from closed-form integrals

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
  double max_defect() const {
    double m = 0.0;
    for (double d : completeness_defect) m = std::max(m, d);
    return m;
  }
};

struct DefectReport {
  std::vector<double> defects;
  double max = 0.0;
};

inline std::vector<double> row_defects(const Eigen::MatrixXd& u) {
  std::vector<double> d(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index k = 0; k < u.rows(); ++k) d[k] = 1.0 - u.row(k).squaredNorm();
  return d;
}

inline DefectReport completeness_defect_report(const OverlapMatrix& u) {
  DefectReport r;
  r.defects = row_defects(u.entries);
  for (double d : r.defects) r.max = std::max(r.max, d);
  return r;
}

/// Quadrature order needed for an exact overlap between the first K states of `from`
/// and the first M states of `to`.
inline int overlap_quadrature_order(int from, int to, long K, long M) {
  return recommended_order(K + M + from + to);
}

/// Direct-quadrature overlap matrix. Columns are streamed in blocks so memory stays
/// O(order * block) however large M is.
inline OverlapMatrix overlap_matrix(const HierarchyBasis& basis, int from, int to, long K, long M,
                                    const QuadratureRule& rule) {
  basis.require_level(from);
  basis.require_level(to);
  if (K < 1 || M < 1) throw DomainError("overlap matrix needs K >= 1 and M >= 1");

  const auto nodes = std::span<const double>(rule.nodes);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(),
                                            static_cast<Eigen::Index>(rule.weights.size()));
  // K x nodes, pre-weighted
  const Eigen::MatrixXd lhs =
      (basis.tabulate(from, K, nodes).array().colwise() * w.array()).matrix().transpose();

  OverlapMatrix out;
  out.from_level = from;
  out.to_level = to;
  out.quadrature_order = rule.order();
  out.entries.resize(K, M);

  constexpr long block = 256;
  LevelTabulator tab(to, nodes, basis.geometry());
  for (long first = 0; first < M; first += block) {
    const long count = std::min(block, M - first);
    out.entries.middleCols(first, count).noalias() = lhs * tab.next_block(count);
  }
  out.completeness_defect = row_defects(out.entries);
  return out;
}

inline OverlapMatrix truncate_columns(const OverlapMatrix& u, Eigen::Index M) {
  OverlapMatrix t = u;
  t.entries = u.entries.leftCols(M);
  t.completeness_defect = row_defects(t.entries);
  return t;
}

/// Basis-truncation policy: M is the smallest multiple of `step` with
/// max_k weight_k * defect_k < defect_tolerance, searched up to `cap`.
struct TruncationPolicy {
  double defect_tolerance = 1e-8;
  long step = 40;
  long cap = 40960;
  long fixed_columns = 0;  // > 0 disables the search
};

inline double weighted_max_defect(const std::vector<double>& defects,
                                  std::span<const double> weights) {
  double m = 0.0;
  for (std::size_t k = 0; k < defects.size(); ++k) {
    const double w = k < weights.size() ? weights[k] : 1.0;
    m = std::max(m, w * defects[k]);
  }
  return m;
}

/// Smallest multiple of `step` (<= cols) meeting the tolerance, using running row sums.
inline std::optional<Eigen::Index> smallest_sufficient_columns(const Eigen::MatrixXd& u,
                                                               std::span<const double> weights,
                                                               double tol, long step) {
  const Eigen::Index K = u.rows();
  std::vector<double> acc(static_cast<std::size_t>(K), 0.0);
  std::vector<double> def(static_cast<std::size_t>(K));
  for (Eigen::Index m = 0; m < u.cols(); ++m) {
    for (Eigen::Index k = 0; k < K; ++k) acc[k] += u(k, m) * u(k, m);
    if ((m + 1) % step == 0 || m + 1 == u.cols()) {
      if ((m + 1) % step != 0) break;
      for (Eigen::Index k = 0; k < K; ++k) def[k] = 1.0 - acc[k];
      if (weighted_max_defect(def, weights) < tol) return m + 1;
    }
  }
  return std::nullopt;
}

/// Adaptive search for M. `build(M)` must return the overlap matrix with M columns.
/// The defect falls off as M^-3 for the box family, which drives the column prediction.
inline OverlapMatrix adaptive_overlap(const std::function<OverlapMatrix(long)>& build, long K,
                                      std::span<const double> weights,
                                      const TruncationPolicy& policy) {
  if (policy.fixed_columns > 0) return build(policy.fixed_columns);
  const long step = policy.step;
  auto round_up = [step](double m) {
    return static_cast<long>(std::ceil(m / static_cast<double>(step))) * step;
  };
  long M = std::min(policy.cap, round_up(std::max<double>(8.0 * step, 2.0 * K + 40.0)));
  double last_defect = 0.0;
  while (true) {
    OverlapMatrix u = build(M);
    if (auto best = smallest_sufficient_columns(u.entries, weights, policy.defect_tolerance, step)) {
      return *best == u.cols() ? u : truncate_columns(u, *best);
    }
    last_defect = weighted_max_defect(u.completeness_defect, weights);
    if (M >= policy.cap) {
      throw TruncationError("completeness defect " + std::to_string(last_defect) +
                            " still above tolerance " + std::to_string(policy.defect_tolerance) +
                            " at the column cap M=" + std::to_string(policy.cap));
    }
    const double ratio = std::max(last_defect / policy.defect_tolerance, 1.0);
    const double predicted = static_cast<double>(M) * std::cbrt(ratio) * 1.08;
    M = std::min(policy.cap, std::max(round_up(predicted), round_up(1.25 * static_cast<double>(M))));
  }
}

inline OverlapMatrix adaptive_overlap_matrix(const HierarchyBasis& basis, int from, int to, long K,
                                             std::span<const double> weights,
                                             const TruncationPolicy& policy,
                                             int min_quadrature_order = 0) {
  auto build = [&](long M) {
    const int order = std::max(min_quadrature_order, overlap_quadrature_order(from, to, K, M));
    return overlap_matrix(basis, from, to, K, M, build_quadrature(order, basis.geometry()));
  };
  return adaptive_overlap(build, K, weights, policy);
}

// ---------------------------------------------------------------------------------------------
// On-disk cache. The file records a free-form key string; a load only succeeds when the
// stored key matches exactly, so any parameter or format change invalidates old files.

inline constexpr char overlap_cache_magic[8] = {'S', 'U', 'S', 'Y', 'Q', 'O', 'V', 'L'};
inline constexpr std::uint32_t overlap_cache_version = 1;

inline void save_overlap(const std::string& path, const OverlapMatrix& u, const std::string& key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write overlap cache " + path, ExitCode::numerical_failure);
  auto put = [&out](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  out.write(overlap_cache_magic, sizeof(overlap_cache_magic));
  put(overlap_cache_version);
  const auto key_len = static_cast<std::uint64_t>(key.size());
  put(key_len);
  out.write(key.data(), static_cast<std::streamsize>(key.size()));
  put(static_cast<std::int32_t>(u.from_level));
  put(static_cast<std::int32_t>(u.to_level));
  put(static_cast<std::int32_t>(u.quadrature_order));
  put(static_cast<std::int64_t>(u.rows()));
  put(static_cast<std::int64_t>(u.cols()));
  // column-major, as stored by Eigen
  out.write(reinterpret_cast<const char*>(u.entries.data()),
            static_cast<std::streamsize>(sizeof(double) * u.entries.size()));
}

inline std::optional<OverlapMatrix> load_overlap(const std::string& path, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  auto get = [&in](auto& v) { in.read(reinterpret_cast<char*>(&v), sizeof(v)); };
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, overlap_cache_magic, sizeof(magic)) != 0) return std::nullopt;
  std::uint32_t version = 0;
  get(version);
  if (version != overlap_cache_version) return std::nullopt;
  std::uint64_t key_len = 0;
  get(key_len);
  if (!in || key_len > (1u << 20)) return std::nullopt;
  std::string stored(key_len, '\0');
  in.read(stored.data(), static_cast<std::streamsize>(key_len));
  if (!in || stored != key) return std::nullopt;
  std::int32_t from = 0, to = 0, order = 0;
  std::int64_t rows = 0, cols = 0;
  get(from);
  get(to);
  get(order);
  get(rows);
  get(cols);
  if (!in || rows < 1 || cols < 1) return std::nullopt;
  OverlapMatrix u;
  u.from_level = from;
  u.to_level = to;
  u.quadrature_order = order;
  u.entries.resize(rows, cols);
  in.read(reinterpret_cast<char*>(u.entries.data()),
          static_cast<std::streamsize>(sizeof(double) * u.entries.size()));
  if (!in) return std::nullopt;
  u.completeness_defect = row_defects(u.entries);
  return u;
}

/// Plain-text dump: one row per initial state, 17 significant digits.
inline void write_overlap_csv(const std::string& path, const OverlapMatrix& u) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path, ExitCode::numerical_failure);
  out << std::scientific << std::setprecision(16);
  out << "k";
  for (Eigen::Index m = 0; m < u.cols(); ++m) out << ",m" << (m + 1);
  out << ",completeness_defect\n";
  for (Eigen::Index k = 0; k < u.rows(); ++k) {
    out << (k + 1);
    for (Eigen::Index m = 0; m < u.cols(); ++m) out << ',' << u.entries(k, m);
    out << ',' << u.completeness_defect[k] << '\n';
  }
}

}  // namespace susyq
