#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "susyq/errors.hpp"
#include "susyq/geometry.hpp"

namespace susyq {

inline constexpr double occupation_cutoff = 1e-12;
inline constexpr double particle_number_tolerance = 1e-10;

/// Grand-canonical state of the initial Hamiltonian. beta = +inf encodes T = 0.
struct ThermalState {
  double beta = std::numeric_limits<double>::infinity();
  double mu = 0.0;
  double T_over_TF = 0.0;
  long N = 0;
  std::vector<double> occupations;

  bool zero_temperature() const { return std::isinf(beta); }
  std::size_t modes() const { return occupations.size(); }
};

/// T_F = N^2 E_1, the Fermi energy of N particles in the box.
inline double fermi_temperature(long N, const BoxGeometry& geom) {
  return static_cast<double>(N) * static_cast<double>(N) * geom.ground_energy();
}

inline double fermi_dirac(double energy, double mu, double beta) {
  const double x = beta * (energy - mu);
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

inline double particle_number(std::span<const double> energies, double mu, double beta) {
  double n = 0.0;
  for (double e : energies) n += fermi_dirac(e, mu, beta);
  return n;
}

/// Bisection for sum_k n_k(mu) = N on [E_1 - 50/beta, E_last + 50/beta].
inline double solve_chemical_potential(std::span<const double> energies, double beta, long N) {
  if (!(beta > 0.0) || std::isinf(beta)) throw DomainError("chemical potential needs 0 < beta < inf");
  if (N < 1) throw DomainError("chemical potential needs N >= 1");
  if (energies.size() <= static_cast<std::size_t>(N)) {
    throw NumericalError("thermal basis smaller than the particle number");
  }
  const double target = static_cast<double>(N);
  double lo = energies.front() - 50.0 / beta;
  double hi = energies.back() + 50.0 / beta;
  if (!(particle_number(energies, lo, beta) < target && particle_number(energies, hi, beta) > target)) {
    throw NumericalError("chemical potential bracket failure; increase the thermal basis size");
  }
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 400; ++iter) {
    mid = 0.5 * (lo + hi);
    const double n = particle_number(energies, mid, beta);
    if (std::abs(n - target) <= 0.01 * particle_number_tolerance) break;
    if (mid <= lo || mid >= hi) break;  // interval exhausted at double resolution
    (n < target ? lo : hi) = mid;
  }
  return mid;
}

/// Occupations of the initial levels at temperature T = T_over_TF * fermi_temp. The mode
/// count grows until the last occupation is below occupation_cutoff. `energy(k)` is the
/// 1-based single-particle energy, increasing in k.
inline ThermalState thermal_state(const std::function<double(long)>& energy, long N,
                                  double T_over_TF, double fermi_temp) {
  if (N < 1) throw DomainError("thermal state needs N >= 1");
  if (!(T_over_TF >= 0.0) || !std::isfinite(T_over_TF)) {
    throw DomainError("temperature must be finite and >= 0");
  }
  ThermalState s;
  s.N = N;
  s.T_over_TF = T_over_TF;
  if (T_over_TF == 0.0) {
    s.mu = 0.5 * (energy(N) + energy(N + 1));
    s.occupations.assign(static_cast<std::size_t>(N), 1.0);
    return s;
  }
  s.beta = 1.0 / (T_over_TF * fermi_temp);

  long modes = std::max(2 * N, N + 10);
  constexpr long max_modes = 1L << 22;
  std::vector<double> e;
  while (true) {
    e.resize(static_cast<std::size_t>(modes));
    for (long k = 1; k <= modes; ++k) e[k - 1] = energy(k);
    s.mu = solve_chemical_potential(e, s.beta, N);
    long needed = 0;
    for (long k = 1; k <= modes; ++k) {
      if (fermi_dirac(e[k - 1], s.mu, s.beta) < occupation_cutoff) {
        needed = k;
        break;
      }
    }
    if (needed > 0) {
      modes = needed;
      break;
    }
    if (modes >= max_modes) throw NumericalError("thermal basis exceeds " + std::to_string(max_modes));
    modes *= 2;
  }
  // re-solve on the final mode set so sum n_k = N holds on exactly the retained modes
  e.resize(static_cast<std::size_t>(modes));
  s.mu = solve_chemical_potential(e, s.beta, N);
  s.occupations.resize(static_cast<std::size_t>(modes));
  for (long k = 0; k < modes; ++k) s.occupations[k] = fermi_dirac(e[k], s.mu, s.beta);
  return s;
}

}  // namespace susyq
