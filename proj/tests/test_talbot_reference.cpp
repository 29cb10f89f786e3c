#include <cmath>
#include <map>
#include <numbers>

#include <gtest/gtest.h>

#include "susyq/quench.hpp"
#include "susyq/talbot.hpp"
#include "susyq/work.hpp"

using namespace susyq;

namespace {

constexpr double pi = std::numbers::pi;

double trig_state(long n, double x, double L) {
  const double a = n * pi * x / L;
  return std::sqrt(2.0 / L) * (n % 2 == 1 ? std::cos(a) : std::sin(a));
}

// composite Simpson over the narrower box, where the initial state lives
double simpson_overlap(long k, long l, double Lp, double L, int panels = 20000) {
  const double a = -Lp / 2, h = Lp / panels;
  double acc = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double x = a + i * h;
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * trig_state(k, x, Lp) * trig_state(l, x, L);
  }
  return acc * h / 3.0;
}

const PreparedQuench& talbot(std::vector<double> temps) {
  static std::map<std::vector<double>, PreparedQuench> cache;
  auto it = cache.find(temps);
  if (it == cache.end()) it = cache.emplace(temps, prepare_expansion(ExpansionSpec{}, temps)).first;
  return it->second;
}

}  // namespace

TEST(BoxBoxOverlap, IdenticalWidthsGiveKronecker) {
  for (long k = 1; k <= 12; ++k)
    for (long l = 1; l <= 12; ++l) EXPECT_NEAR(box_box_overlap(k, l, 4.0, 4.0), k == l ? 1.0 : 0.0, 1e-14);
}

TEST(BoxBoxOverlap, ParitySelection) {
  EXPECT_EQ(box_box_overlap(1, 2, 3.9, 4.0), 0.0);
  EXPECT_EQ(box_box_overlap(1, 2, 1.0, 7.0), 0.0);
  EXPECT_EQ(box_box_overlap(4, 7, 3.0, 4.0), 0.0);
}

TEST(BoxBoxOverlap, GroundStateExample) {
  const double v = box_box_overlap(1, 1, 3.9, 4.0);
  EXPECT_GT(v, 0.99);
  EXPECT_LT(v, 1.0);
  EXPECT_NEAR(v, simpson_overlap(1, 1, 3.9, 4.0), 1e-12);
}

TEST(BoxBoxOverlap, MatchesQuadratureOracle) {
  for (const auto& [Lp, L] : {std::pair{3.9, 4.0}, std::pair{2.0, 4.0}, std::pair{1.3, 5.0}}) {
    for (long k = 1; k <= 8; ++k)
      for (long l = 1; l <= 20; ++l)
        EXPECT_NEAR(box_box_overlap(k, l, Lp, L), simpson_overlap(k, l, Lp, L), 1e-11) << k << " " << l << " " << Lp;
  }
}

TEST(BoxBoxOverlap, ResonantFrequencies) {
  // k / L' = l / L with equal parity: cos(3 pi x / 4) on both sides
  const double Lp = 4.0 / 3.0, L = 4.0;
  const double exact = box_box_overlap(1, 3, Lp, L);
  EXPECT_TRUE(std::isfinite(exact));
  EXPECT_NEAR(exact, simpson_overlap(1, 3, Lp, L), 1e-12);
  EXPECT_NEAR(box_box_overlap(1, 3, Lp * (1 + 1e-9), L), exact, 1e-8);
  EXPECT_NEAR(box_box_overlap(2, 6, Lp, L), simpson_overlap(2, 6, Lp, L), 1e-12);
}

TEST(BoxBoxOverlap, RejectsBadIndices) {
  EXPECT_THROW(box_box_overlap(0, 1, 3.9, 4.0), DomainError);
  EXPECT_THROW(box_box_overlap(1, -2, 3.9, 4.0), DomainError);
}

TEST(ExpansionSpec, Validation) {
  ExpansionSpec s;
  EXPECT_NO_THROW(s.validate());
  s.L_initial = 4.5;
  EXPECT_THROW(s.validate(), DomainError);
  s = ExpansionSpec{};
  s.L_initial = 0.0;
  EXPECT_THROW(s.validate(), DomainError);
  s = ExpansionSpec{};
  s.K = 10;
  EXPECT_THROW(s.validate(), DomainError);
  s = ExpansionSpec{};
  s.M = 20;
  EXPECT_THROW(s.validate(), DomainError);
}

TEST(TalbotOverlapMatrix, DefectConvergesAsInverseCube) {
  // the initial state has a kink at the old wall, so coefficients fall as l^-2
  double prev = 0.0;
  for (long M : {200, 400, 800, 1600}) {
    const double d = box_box_overlap_matrix(3.9, 4.0, 30, M).max_defect();
    if (prev > 0.0) {
      EXPECT_NEAR(prev / d, 8.0, 0.8) << M;
    }
    prev = d;
  }
}

TEST(TalbotOverlapMatrix, AdaptiveTruncationMeetsTolerance) {
  const std::vector<double> w(30, 1.0);
  const auto u = talbot_overlap_matrix(ExpansionSpec{}, w);
  EXPECT_LT(u.max_defect(), 1e-8);
  EXPECT_EQ(u.cols() % 40, 0);
  EXPECT_GT(box_box_overlap_matrix(3.9, 4.0, 30, u.cols() - 40).max_defect(), 1e-8);

  TruncationPolicy tight;
  tight.cap = 400;
  EXPECT_THROW(talbot_overlap_matrix(ExpansionSpec{}, w, tight), TruncationError);

  ExpansionSpec fixed;
  fixed.M = 200;
  EXPECT_EQ(talbot_overlap_matrix(fixed, w).cols(), 200);
}

TEST(PrepareExpansion, ModelFields) {
  const auto& pq = talbot({0.0});
  const auto& m = pq.model;
  EXPECT_EQ(m.name, "talbot");
  EXPECT_FALSE(m.commensurate);
  EXPECT_NEAR(m.revival_time, 64 / pi, 1e-12);
  EXPECT_NEAR(m.fermi_temperature, 900 * pi * pi / (2 * 3.9 * 3.9), 1e-9);
  EXPECT_NEAR(static_cast<double>(m.initial.turns_per_revival), (4.0 / 3.9) * (4.0 / 3.9), 1e-15);
  EXPECT_NEAR(m.initial.energy(1), 4 * pi * pi / (2 * 3.9 * 3.9), 1e-12);
  EXPECT_NEAR(m.final.energy(1), 4 * pi * pi / 32, 1e-12);

  ExpansionSpec same;
  same.L_initial = 4.0;
  same.M = 40;
  const auto trivial = prepare_expansion(same, std::vector<double>{0.0});
  EXPECT_TRUE(trivial.model.commensurate);
  const auto [tm, tth] = trivial.at(0);
  for (const auto& s : survival_sweep(tm, tth, {0.0, 0.1, 0.37})) EXPECT_NEAR(s.F, 1.0, 1e-12);
}

TEST(TalbotSurvival, ZeroTemperatureRevivalsAtEveryQuarter) {
  const auto [m, th] = talbot({0.0}).at(0);
  const double tol = 10 * m.U.max_defect();
  std::vector<double> grid{0.0};
  for (int p = 1; p <= 8; ++p) grid.push_back(0.25 * p);
  for (const auto& s : survival_sweep(m, th, grid)) EXPECT_NEAR(s.F, 1.0, std::max(tol, 1e-6)) << s.tau;
  EXPECT_LT(survival_sweep(m, th, {0.125}).front().F, 0.5);
}

TEST(TalbotSurvival, AllRevivalsAreQuasiRevivals) {
  const auto [m, th] = talbot({0.0}).at(0);
  for (int p = 1; p <= 8; ++p) {
    const auto d = phase_diagnostics(evolution_matrix_at(m.U, m.initial, m.final, 0.25 * p), m.N, 1e-6);
    EXPECT_EQ(d.label, RevivalClass::quasi_revival) << p;
    double lo = pi, hi = -pi;
    for (auto z : d.diagonal) {
      EXPECT_NEAR(std::abs(z), 1.0, 1e-6);
      lo = std::min(lo, std::arg(z));
      hi = std::max(hi, std::arg(z));
    }
    EXPECT_GT(hi - lo, pi / 2) << p;
  }
}

TEST(TalbotSurvival, FiniteTemperatureDestroysEveryRevival) {
  for (double T : {0.05, 0.1}) {
    const auto [m, th] = talbot({T}).at(0);
    std::vector<double> grid;
    for (int p = 1; p <= 8; ++p) grid.push_back(0.25 * p);
    for (const auto& s : survival_sweep(m, th, grid)) EXPECT_LT(s.F, 0.9) << "T=" << T << " tau=" << s.tau;
  }
}

TEST(TalbotWork, IncommensurateKeysAndSumRules) {
  const long N = 10;
  ExpansionSpec s;
  s.N = 10;
  s.K = 10;
  const auto pq = prepare_expansion(s, std::vector<double>{0.0});
  const auto ws = enumerate_final_states(pq.model, N, WpdOptions{});
  EXPECT_FALSE(ws.commensurate);
  EXPECT_GE(ws.total_probability, 0.999);
  EXPECT_LE(ws.total_probability, 1.0 + 1e-10);
  bool non_integer = false;
  for (const auto& b : ws.bins) {
    EXPECT_EQ(b.key, std::llround(b.W_over_E1 * 1e9));
    non_integer |= std::abs(b.W_over_E1 - std::round(b.W_over_E1)) > 1e-3;
  }
  EXPECT_TRUE(non_integer);
  // the expansion lowers every level, so the smallest work is negative
  EXPECT_LT(ws.records.front().W, 0.0);
  for (std::size_t i = 1; i < ws.bins.size(); ++i) EXPECT_LT(ws.bins[i - 1].W, ws.bins[i].W);
}
