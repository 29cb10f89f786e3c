#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "susyq/geometry.hpp"

namespace susyq {

/// Single-particle energies stored as integer quanta of a common unit, E_i = unit * quanta[i].
/// Box-family spectra are exact integers in units of E_1, which keeps revival phases and
/// work values free of floating-point drift.
struct Spectrum {
  double unit = 1.0;
  std::vector<std::int64_t> quanta;
  // unit * t_r / (2 pi): full turns per quantum over one revival period of the final box
  long double turns_per_revival = 1.0L;

  std::size_t size() const { return quanta.size(); }
  double energy(std::size_t i) const { return unit * static_cast<double>(quanta[i]); }

  std::vector<double> energies() const {
    std::vector<double> e(quanta.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = energy(i);
    return e;
  }

  Spectrum head(std::size_t n) const {
    Spectrum s{unit, {}, turns_per_revival};
    s.quanta.assign(quanta.begin(), quanta.begin() + static_cast<std::ptrdiff_t>(n));
    return s;
  }
};

/// Spectrum of level alpha of the box hierarchy, states m = 1..count: quanta (m+alpha-1)^2.
inline Spectrum level_spectrum(int alpha, std::size_t count, const BoxGeometry& geom) {
  Spectrum s{geom.ground_energy(), std::vector<std::int64_t>(count), 1.0L};
  for (std::size_t i = 0; i < count; ++i) {
    const auto n = static_cast<std::int64_t>(i) + alpha;
    s.quanta[i] = n * n;
  }
  return s;
}

/// exp(i E t) evaluated by reducing E t / (2 pi) to a fractional turn before the trig call.
/// Built from a time in units of t_r, quarter-period instants give exact turn counts.
class PhaseClock {
 public:
  PhaseClock(double unit, double t)
      : turns_per_quantum_(static_cast<long double>(unit) * static_cast<long double>(t) /
                           (2.0L * std::numbers::pi_v<long double>)) {}

  static PhaseClock at_fraction(const Spectrum& s, double tau) {
    PhaseClock c(0.0, 0.0);
    c.turns_per_quantum_ = s.turns_per_revival * static_cast<long double>(tau);
    return c;
  }

  std::complex<double> operator()(std::int64_t quanta) const {
    long double turns = static_cast<long double>(quanta) * turns_per_quantum_;
    turns -= std::floor(turns);
    const double angle = static_cast<double>(2.0L * std::numbers::pi_v<long double> * turns);
    return {std::cos(angle), std::sin(angle)};
  }

 private:
  long double turns_per_quantum_;
};

}  // namespace susyq
