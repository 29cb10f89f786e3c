#pragma once

// Independent reference computations shared by the unit tests and the acceptance run.

#include <cmath>
#include <utility>
#include <vector>

#include "susyq/quadrature.hpp"
#include "susyq/spectral_basis.hpp"

namespace susyq::oracle {

inline double det_small(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double d = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (a[p][c] == 0.0) return 0.0;
    if (p != c) {
      std::swap(a[p], a[c]);
      d = -d;
    }
    d *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return d;
}

// <Phi_final | Psi_initial> as an N-dimensional integral of the two antisymmetrised
// product wavefunctions on a tensor Gauss-Legendre grid (N <= 3).
inline double brute_force_amplitude(int to, const std::vector<long>& initial, const std::vector<long>& final_set,
                                    int nodes, const BoxGeometry& box = BoxGeometry{4.0}) {
  const auto rule = build_quadrature(nodes, box);
  const std::size_t N = initial.size();
  std::vector<std::vector<double>> a(N, std::vector<double>(nodes)), b(N, std::vector<double>(nodes));
  for (std::size_t i = 0; i < N; ++i) {
    const auto si = box_wavefunction(initial[i], box);
    const auto sf = hierarchy_wavefunction(to, final_set[i], box);
    for (int q = 0; q < nodes; ++q) {
      a[i][q] = si(rule.nodes[q]);
      b[i][q] = sf(rule.nodes[q]);
    }
  }
  double acc = 0.0;
  std::vector<int> idx(N, 0);
  const double nfact = N == 1 ? 1.0 : (N == 2 ? 2.0 : 6.0);
  while (true) {
    double w = 1.0;
    std::vector<std::vector<double>> A(N, std::vector<double>(N)), B(N, std::vector<double>(N));
    for (std::size_t p = 0; p < N; ++p) {
      w *= rule.weights[idx[p]];
      for (std::size_t i = 0; i < N; ++i) {
        A[i][p] = a[i][idx[p]];
        B[i][p] = b[i][idx[p]];
      }
    }
    acc += w * det_small(A) * det_small(B) / nfact;
    std::size_t p = 0;
    while (p < N && ++idx[p] == nodes) idx[p++] = 0;
    if (p == N) break;
  }
  return acc;
}

}  // namespace susyq::oracle
