#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "susyq/errors.hpp"

namespace susyq {

/// det = exp(log_abs) * phase, with |phase| = 1.
struct LogDeterminant {
  double log_abs = 0.0;
  std::complex<double> phase{1.0, 0.0};

  std::complex<double> value() const { return std::exp(log_abs) * phase; }
  /// |det|^2 and its logarithm.
  double probability() const { return std::exp(2.0 * log_abs); }
  double log_probability() const { return 2.0 * log_abs; }
};

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string("non-finite entries in ") + what);
}

/// Log-determinant via LU with partial pivoting. Works for real and complex scalars.
template <class Derived>
LogDeterminant log_determinant(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols()) throw NumericalError("determinant of a non-square matrix");
  require_finite(m, "determinant input");
  LogDeterminant out;
  if (m.rows() == 0) return out;

  const Eigen::PartialPivLU<Matrix> lu(m.eval());
  const auto& packed = lu.matrixLU();
  std::complex<double> phase = static_cast<double>(lu.permutationP().determinant());
  double log_abs = 0.0;
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const std::complex<double> u(packed(i, i));
    const double a = std::abs(u);
    if (a == 0.0) {
      out.log_abs = -std::numeric_limits<double>::infinity();
      out.phase = 1.0;
      return out;
    }
    log_abs += std::log(a);
    phase *= u / a;
  }
  out.log_abs = log_abs;
  out.phase = phase / std::abs(phase);
  return out;
}

template <class Derived>
std::complex<double> determinant(const Eigen::MatrixBase<Derived>& m) {
  return log_determinant(m).value();
}

}  // namespace susyq
