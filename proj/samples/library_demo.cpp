// Survival probability and work statistics for the 1 -> 2 quench, straight from the library.

#include <cstdio>
#include <vector>

#include "susyq/susyq.hpp"

int main() {
  using namespace susyq;
  QuenchSpec spec;  // box of width 4, N = 30, quench to the first partner
  spec.to_level = 2;
  const auto pq = prepare_quench(spec, std::vector<double>{0.0, 0.1});

  std::printf("t_r = %.6f, M = %ld, max completeness defect = %.2e\n", pq.model.revival_time,
              static_cast<long>(pq.model.U.cols()), pq.model.U.max_defect());
  for (std::size_t i = 0; i < pq.temperatures.size(); ++i) {
    const auto [model, thermal] = pq.at(i);
    std::printf("T/T_F = %.2f\n", pq.temperatures[i]);
    for (const auto& s : survival_sweep(model, thermal, {0.125, 0.25, 0.5, 1.0})) {
      std::printf("  t/t_r = %.3f  F = %.8f  %s\n", s.tau, s.F, to_string(s.diagnostics.label));
    }
  }

  const long N = spec.N;
  const auto ws = enumerate_final_states(pq.model, N);
  std::printf("<W> closed form %.4f, from the distribution %.4f, sum P = %.6f\n",
              average_work(2, N, spec.geom), ws.first_moment, ws.total_probability);
  std::printf("ground-ground transition at W/E_1 = %.0f with P = %.6f\n", ws.records.front().W_over_E1,
              ws.records.front().P);
  return 0;
}
