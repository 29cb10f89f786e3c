#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "susyq/errors.hpp"

namespace susyq {

/// Infinite box of width `length` centred at the origin. Units hbar = m = 1.
struct BoxGeometry {
  double length = 1.0;

  BoxGeometry() = default;
  explicit BoxGeometry(double L) : length(L) {
    if (!(L > 0.0) || !std::isfinite(L)) {
      throw DomainError("box length must be positive and finite, got " + std::to_string(L));
    }
  }

  double half_width() const { return 0.5 * length; }

  /// Ground-state energy of the bare box, pi^2 / (2 L^2).
  double ground_energy() const {
    return std::numbers::pi * std::numbers::pi / (2.0 * length * length);
  }

  /// Phase variable u = pi x / L, in (-pi/2, pi/2) on the open interval.
  double phase(double x) const { return std::numbers::pi * x / length; }

  bool interior(double x) const { return std::abs(x) < half_width(); }

  void require_interior(double x) const {
    if (!interior(x)) {
      throw DomainError("position " + std::to_string(x) + " outside the open interval (-" +
                        std::to_string(half_width()) + ", " + std::to_string(half_width()) + ")");
    }
  }
};

enum class Parity { even, odd };

inline Parity flip(Parity p) { return p == Parity::even ? Parity::odd : Parity::even; }

inline const char* to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

}  // namespace susyq
