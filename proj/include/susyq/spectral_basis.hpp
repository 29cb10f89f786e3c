#pragma once

// Analytic eigenbasis of the infinite box and of its supersymmetric partner hierarchy.
//
// With u = pi x / L, s = sin u, c = cos u, the annihilation operator of level j acts on
// functions of the form c^j P(s) as
//
//     A_j [c^j P(s)] = (pi / (sqrt2 L)) c^(j+1) P'(s),
//
// so (alpha-1)-fold annihilation of a box state c U_{n-1}(s) is polynomial
// differentiation.  Level-alpha states are therefore
//
//     psi^(alpha)_m(x) = sign * sqrt(2/L) * 2^(alpha-1) (alpha-1)! * c^alpha C^(alpha)_{m-1}(s)
//                        / prod_{j<alpha} sqrt(n^2 - j^2),         n = m + alpha - 1,
//
// with C^(lambda) the Gegenbauer polynomials.  The form is free of removable 0/0 points, so
// evaluation is uniform right up to the walls.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "susyq/errors.hpp"
#include "susyq/geometry.hpp"

namespace susyq {

inline constexpr int default_alpha_max = 4;

/// Value and first two derivatives of a real function at one point.
struct Jet {
  double value = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
};

namespace detail {

inline void require_index(long n, const char* what) {
  if (n < 1) throw DomainError(std::string(what) + " must be >= 1, got " + std::to_string(n));
}

inline void require_level(int alpha) {
  if (alpha < 1) throw DomainError("hierarchy level must be >= 1, got " + std::to_string(alpha));
}

/// C^(lambda)_n(s) by the three-term recurrence; returns 0 for n < 0.
inline double gegenbauer(int lambda, int n, double s) {
  if (n < 0) return 0.0;
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 2.0 * lambda * s;
  for (int k = 2; k <= n; ++k) {
    const double next = (2.0 * s * (k + lambda - 1) * cur - (k + 2 * lambda - 2) * prev) / k;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Sign relating sqrt(2/L) cos(n u) (n odd) or sin(n u) (n even) to c U_{n-1}(s).
inline double box_sign(long n) {
  if (n % 2 == 1) return ((n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
  return (n / 2) % 2 == 1 ? 1.0 : -1.0;
}

inline double int_pow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace detail

/// Energy quantum number of state m on level alpha: the box index m + alpha - 1.
inline std::int64_t box_index(int alpha, long m) { return static_cast<std::int64_t>(m) + alpha - 1; }

/// E_n = n^2 pi^2 / (2 L^2).
inline double box_energy(long n, const BoxGeometry& geom) {
  detail::require_index(n, "box index n");
  const auto n2 = static_cast<std::int64_t>(n) * n;
  return static_cast<double>(n2) * geom.ground_energy();
}

/// Direct trigonometric box eigenfunction sqrt(2/L) cos(n pi x/L) (n odd) / sin (n even).
inline double box_amplitude(long n, double x, const BoxGeometry& geom) {
  detail::require_index(n, "box index n");
  geom.require_interior(x);
  const double arg = static_cast<double>(n) * geom.phase(x);
  const double norm = std::sqrt(2.0 / geom.length);
  return n % 2 == 1 ? norm * std::cos(arg) : norm * std::sin(arg);
}

/// Normalisation prefactor of psi^(alpha)_m in the Gegenbauer representation.
inline double hierarchy_prefactor(int alpha, long m, const BoxGeometry& geom) {
  detail::require_level(alpha);
  detail::require_index(m, "state index m");
  const std::int64_t n = box_index(alpha, m);
  double denom = 1.0;
  for (int j = 1; j < alpha; ++j) {
    const double gap = static_cast<double>(n * n - static_cast<std::int64_t>(j) * j);
    if (!(gap > 0.0)) {
      throw NumericalError("non-positive normalisation energy gap for alpha=" +
                           std::to_string(alpha) + ", m=" + std::to_string(m));
    }
    denom *= std::sqrt(gap);
  }
  double factorial = 1.0;
  for (int j = 2; j < alpha; ++j) factorial *= j;
  return detail::box_sign(n) * std::sqrt(2.0 / geom.length) * std::ldexp(factorial, alpha - 1) /
         denom;
}

/// One eigenstate psi^(alpha)_m with its energy, parity and analytic evaluator.
struct SingleParticleState {
  int level = 1;
  long index = 1;
  double energy = 0.0;
  Parity parity = Parity::even;
  BoxGeometry geom;
  double prefactor = 0.0;

  double operator()(double x) const { return jet(x).value; }

  /// Amplitude and its first two x-derivatives.
  Jet jet(double x) const {
    geom.require_interior(x);
    const double k = std::numbers::pi / geom.length;
    const double u = geom.phase(x);
    const double s = std::sin(u);
    const double c = std::cos(u);
    const int a = level;
    const int deg = static_cast<int>(index) - 1;
    const double p0 = detail::gegenbauer(a, deg, s);
    const double p1 = 2.0 * a * detail::gegenbauer(a + 1, deg - 1, s);
    const double p2 = 4.0 * a * (a + 1) * detail::gegenbauer(a + 2, deg - 2, s);
    const double ca = detail::int_pow(c, a);

    Jet j;
    j.value = prefactor * ca * p0;
    j.slope = prefactor * k * (-a * detail::int_pow(c, a - 1) * s * p0 + ca * c * p1);
    double d2 = -a * ca * p0 - (2.0 * a + 1.0) * ca * s * p1 + ca * c * c * p2;
    if (a >= 2) d2 += a * (a - 1.0) * detail::int_pow(c, a - 2) * s * s * p0;
    j.curvature = prefactor * k * k * d2;
    return j;
  }
};

inline SingleParticleState hierarchy_wavefunction(int alpha, long m, const BoxGeometry& geom) {
  detail::require_level(alpha);
  detail::require_index(m, "state index m");
  SingleParticleState st;
  st.level = alpha;
  st.index = m;
  st.energy = box_energy(static_cast<long>(box_index(alpha, m)), geom);
  st.parity = (m % 2 == 1) ? Parity::even : Parity::odd;
  st.geom = geom;
  st.prefactor = hierarchy_prefactor(alpha, m, geom);
  return st;
}

inline SingleParticleState box_wavefunction(long n, const BoxGeometry& geom) {
  return hierarchy_wavefunction(1, n, geom);
}

/// W^(alpha)(x) = (alpha-1) pi/(sqrt2 L) tan(pi x / L), the superpotential generating level alpha.
struct Superpotential {
  int level = 2;
  BoxGeometry geom;

  double strength() const {
    return (level - 1) * std::numbers::pi / (std::numbers::sqrt2 * geom.length);
  }
  double operator()(double x) const {
    geom.require_interior(x);
    return strength() * std::tan(geom.phase(x));
  }
  double derivative(double x) const {
    geom.require_interior(x);
    const double c = std::cos(geom.phase(x));
    return strength() * (std::numbers::pi / geom.length) / (c * c);
  }
};

inline Superpotential superpotential(int alpha, const BoxGeometry& geom) {
  if (alpha < 2) throw DomainError("superpotential needs target level >= 2");
  return Superpotential{alpha, geom};
}

/// g = f'/sqrt2 + W^(level_from+1) f. `f` maps x to a Jet (value and slope are used).
template <class F>
std::function<double(double)> apply_annihilation(int level_from, F f, const BoxGeometry& geom) {
  detail::require_level(level_from);
  const Superpotential w = superpotential(level_from + 1, geom);
  return [w, f = std::move(f)](double x) {
    const Jet j = f(x);
    return j.slope / std::numbers::sqrt2 + w(x) * j.value;
  };
}

inline std::function<double(double)> apply_annihilation(int level_from,
                                                        const SingleParticleState& state) {
  return apply_annihilation(
      level_from, [state](double x) { return state.jet(x); }, state.geom);
}

/// Constant removed from the physical level-alpha potential by the factorised form, (alpha-1)^2 E_1.
inline double partner_potential_offset(int alpha, const BoxGeometry& geom) {
  detail::require_level(alpha);
  return static_cast<double>((alpha - 1) * (alpha - 1)) * geom.ground_energy();
}

/// Partner potential in factorised form, W^2 + W'/sqrt2 = E_1 [alpha(alpha-1) sec^2 - (alpha-1)^2].
/// Its spectrum is E^(1)_{m+alpha-1} - partner_potential_offset(alpha). Level 1 is the bare box (0).
inline std::function<double(double)> partner_potential(int alpha, const BoxGeometry& geom) {
  detail::require_level(alpha);
  if (alpha == 1) {
    return [geom](double x) {
      geom.require_interior(x);
      return 0.0;
    };
  }
  const Superpotential w = superpotential(alpha, geom);
  return [w](double x) {
    const double v = w(x);
    return v * v + w.derivative(x) / std::numbers::sqrt2;
  };
}

/// Tabulates psi^(alpha)_m at fixed nodes for consecutive m, carrying the Gegenbauer
/// recurrence between blocks so arbitrarily many states can be streamed.
class LevelTabulator {
 public:
  LevelTabulator(int alpha, std::span<const double> nodes, const BoxGeometry& geom)
      : alpha_(alpha), geom_(geom), sin_(nodes.size()), weight_(nodes.size()),
        prev_(nodes.size(), 0.0), cur_(nodes.size(), 1.0) {
    detail::require_level(alpha);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      geom.require_interior(nodes[i]);
      const double u = geom.phase(nodes[i]);
      sin_[i] = std::sin(u);
      weight_[i] = detail::int_pow(std::cos(u), alpha);
    }
  }

  int level() const { return alpha_; }
  long next_index() const { return next_m_; }

  /// Values of the next `count` states: column j holds psi^(alpha)_{next_index()+j}.
  Eigen::MatrixXd next_block(long count) {
    const auto nodes = static_cast<Eigen::Index>(sin_.size());
    Eigen::MatrixXd out(nodes, count);
    for (long j = 0; j < count; ++j) {
      const long m = next_m_ + j;
      const int deg = static_cast<int>(m) - 1;
      if (deg >= 1) advance(deg);
      const double pref = hierarchy_prefactor(alpha_, m, geom_);
      for (Eigen::Index i = 0; i < nodes; ++i) out(i, j) = pref * weight_[i] * cur_[i];
    }
    next_m_ += count;
    return out;
  }

 private:
  // moves (prev_, cur_) from (C_{deg-2}, C_{deg-1}) to (C_{deg-1}, C_deg)
  void advance(int deg) {
    const int lam = alpha_;
    for (std::size_t i = 0; i < sin_.size(); ++i) {
      double next;
      if (deg == 1) {
        next = 2.0 * lam * sin_[i];
      } else {
        next = (2.0 * sin_[i] * (deg + lam - 1) * cur_[i] - (deg + 2 * lam - 2) * prev_[i]) / deg;
      }
      prev_[i] = cur_[i];
      cur_[i] = next;
    }
  }

  int alpha_;
  BoxGeometry geom_;
  std::vector<double> sin_;
  std::vector<double> weight_;
  std::vector<double> prev_;
  std::vector<double> cur_;
  long next_m_ = 1;
};

/// The level family alpha = 1..alpha_max over one box. Immutable once built.
class HierarchyBasis {
 public:
  explicit HierarchyBasis(const BoxGeometry& geom, int alpha_max = default_alpha_max)
      : geom_(geom), alpha_max_(alpha_max) {
    if (alpha_max < 1) throw DomainError("alpha_max must be >= 1");
  }

  const BoxGeometry& geometry() const { return geom_; }
  int alpha_max() const { return alpha_max_; }

  void require_level(int alpha) const {
    if (alpha < 1 || alpha > alpha_max_) {
      throw DomainError("hierarchy level " + std::to_string(alpha) + " outside 1.." +
                        std::to_string(alpha_max_));
    }
  }

  SingleParticleState state(int alpha, long m) const {
    require_level(alpha);
    return hierarchy_wavefunction(alpha, m, geom_);
  }

  double energy(int alpha, long m) const {
    require_level(alpha);
    return box_energy(static_cast<long>(box_index(alpha, m)), geom_);
  }

  /// nodes x count matrix of psi^(alpha)_{1..count}.
  Eigen::MatrixXd tabulate(int alpha, long count, std::span<const double> nodes) const {
    require_level(alpha);
    LevelTabulator tab(alpha, nodes, geom_);
    return tab.next_block(count);
  }

 private:
  BoxGeometry geom_;
  int alpha_max_;
};

}  // namespace susyq
