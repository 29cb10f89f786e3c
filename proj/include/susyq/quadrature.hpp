#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "susyq/errors.hpp"
#include "susyq/geometry.hpp"

namespace susyq {

inline constexpr int default_quadrature_order = 400;

/// Gauss-Legendre rule mapped onto the open box interval (-L/2, L/2).
struct QuadratureRule {
  BoxGeometry geom;
  std::vector<double> nodes;
  std::vector<double> weights;

  int order() const { return static_cast<int>(nodes.size()); }
  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// Order that integrates trigonometric polynomials of degree `trig_degree` in u = pi x / L
/// to round-off (about 0.9 nodes per degree plus a margin), never below the default.
inline int recommended_order(long trig_degree) {
  const long needed = static_cast<long>(std::ceil(0.9 * static_cast<double>(trig_degree))) + 32;
  return static_cast<int>(std::max<long>(default_quadrature_order, needed));
}

inline QuadratureRule build_quadrature(int order, const BoxGeometry& geom) {
  if (order < 2) throw DomainError("quadrature order must be >= 2");
  const int n = order;
  std::vector<double> x(n), w(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi-type initial guess for the i-th largest root, then Newton on P_n
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // final derivative at the converged root
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;

  QuadratureRule rule;
  rule.geom = geom;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double h = geom.half_width();
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = h * x[i];
    rule.weights[i] = h * w[i];
  }
  return rule;
}

/// sum_i w_i f(x_i) g(x_i).
template <class F, class G>
double inner_product(const F& f, const G& g, const QuadratureRule& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * f(rule.nodes[i]) * g(rule.nodes[i]);
  }
  return acc;
}

template <class F>
double integrate(const F& f, const QuadratureRule& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
  return acc;
}

}  // namespace susyq
