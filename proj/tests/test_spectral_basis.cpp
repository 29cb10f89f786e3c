#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "susyq/quadrature.hpp"
#include "susyq/spectral_basis.hpp"

using namespace susyq;

namespace {

constexpr double pi = std::numbers::pi;
const BoxGeometry box4{4.0};

// Box state n and its first two derivatives, straight from the trigonometric form.
struct TrigState {
  double v, d1, d2;
};

TrigState trig_box(long n, double x, double L) {
  const double k = n * pi / L;
  const double c = std::sqrt(2.0 / L);
  if (n % 2 == 1) return {c * std::cos(k * x), -c * k * std::sin(k * x), -c * k * k * std::cos(k * x)};
  return {c * std::sin(k * x), c * k * std::cos(k * x), -c * k * k * std::sin(k * x)};
}

double tan_strength(int alpha, double L) { return (alpha - 1) * pi / (std::numbers::sqrt2 * L); }

// A_2 A_1 psi_n / sqrt((E_n - E_1)(E_n - E_2)) with every derivative written out by hand.
double ladder_oracle(int alpha, long n, double x, double L) {
  const TrigState s = trig_box(n, x, L);
  const double u = pi * x / L;
  const double t = std::tan(u);
  const double sec2 = 1.0 / (std::cos(u) * std::cos(u));
  const double E1 = pi * pi / (2 * L * L);
  const double En = n * n * E1;
  const double w2 = tan_strength(2, L) * t;
  const double w2p = tan_strength(2, L) * (pi / L) * sec2;
  const double g = s.d1 / std::numbers::sqrt2 + w2 * s.v;  // A_1 psi
  if (alpha == 2) return g / std::sqrt(En - E1);
  const double gp = s.d2 / std::numbers::sqrt2 + w2p * s.v + w2 * s.d1;
  const double w3 = tan_strength(3, L) * t;
  return (gp / std::numbers::sqrt2 + w3 * g) / std::sqrt((En - E1) * (En - 4 * E1));
}

double max_abs_difference(const SingleParticleState& st, const std::function<double(double)>& f,
                          const QuadratureRule& rule) {
  double m = 0.0;
  for (double x : rule.nodes) m = std::max(m, std::abs(st(x) - f(x)));
  return m;
}

}  // namespace

TEST(BoxEnergy, DirectEvaluation) {
  EXPECT_NEAR(box_energy(1, box4), pi * pi / 32, 1e-15);
  EXPECT_NEAR(box_energy(1, box4), 0.3084251375340424, 1e-15);
  EXPECT_DOUBLE_EQ(box_energy(2, box4), pi * pi / 8);
  EXPECT_NEAR(box_energy(31, box4), 961 * pi * pi / 32, 1e-12);
  EXPECT_NEAR(box_energy(31, box4), 296.40, 5e-3);
}

TEST(BoxEnergy, RejectsBadInput) {
  EXPECT_THROW(box_energy(0, box4), DomainError);
  EXPECT_THROW(BoxGeometry(0.0), DomainError);
  EXPECT_THROW(BoxGeometry(-1.0), DomainError);
}

TEST(BoxWavefunction, PointValues) {
  EXPECT_NEAR(box_wavefunction(1, box4)(0.0), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(box_wavefunction(2, box4)(0.0), 0.0, 1e-15);
  EXPECT_EQ(box_wavefunction(1, box4).parity, Parity::even);
  EXPECT_EQ(box_wavefunction(2, box4).parity, Parity::odd);
}

TEST(BoxWavefunction, MatchesTrigonometricForm) {
  const auto rule = build_quadrature(200, box4);
  for (long n = 1; n <= 60; ++n) {
    const auto st = box_wavefunction(n, box4);
    for (double x : rule.nodes) {
      const TrigState ref = trig_box(n, x, 4.0);
      const Jet j = st.jet(x);
      ASSERT_NEAR(j.value, ref.v, 1e-12) << "n=" << n;
      ASSERT_NEAR(j.slope, ref.d1, 1e-11 * n);
      ASSERT_NEAR(j.curvature, ref.d2, 1e-10 * n * n);
    }
  }
}

TEST(BoxWavefunction, NormalisedUnderIndependentRule) {
  // composite Simpson on 20001 points, unrelated to the Gauss-Legendre rule
  const auto st = box_wavefunction(3, box4);
  const int n = 20000;
  const double h = 4.0 / n;
  double acc = 0.0;
  for (int i = 1; i < n; ++i) {
    const double x = -2.0 + i * h;
    acc += (i % 2 ? 4.0 : 2.0) * st(x) * st(x);
  }
  EXPECT_NEAR(acc * h / 3.0, 1.0, 1e-12);
}

TEST(BoxWavefunction, RejectsWalls) {
  const auto st = box_wavefunction(1, box4);
  EXPECT_THROW(st(2.0), DomainError);
  EXPECT_THROW(st(-2.0), DomainError);
  EXPECT_THROW(box_wavefunction(0, box4), DomainError);
}

TEST(Superpotential, PointValues) {
  EXPECT_DOUBLE_EQ(superpotential(2, box4)(0.0), 0.0);
  EXPECT_NEAR(superpotential(2, box4)(1.0), pi / (4 * std::numbers::sqrt2), 1e-15);
  EXPECT_NEAR(superpotential(2, box4)(1.0), 0.55536, 1e-5);
  EXPECT_NEAR(superpotential(3, box4)(1.0), 1.11072, 1e-5);
  EXPECT_THROW(superpotential(2, box4)(2.0), DomainError);
  EXPECT_THROW(superpotential(1, box4), DomainError);
}

TEST(Superpotential, OddFunction) {
  const auto w = superpotential(4, box4);
  for (double x : {0.1, 0.7, 1.3, 1.99}) EXPECT_NEAR(w(-x), -w(x), 1e-12 * std::abs(w(x)));
}

TEST(PartnerPotential, PointValues) {
  EXPECT_NEAR(partner_potential(2, box4)(0.0), pi * pi / 32, 1e-14);
  EXPECT_DOUBLE_EQ(partner_potential(1, box4)(0.7), 0.0);
  EXPECT_THROW(partner_potential(2, box4)(2.0), DomainError);
}

TEST(PartnerPotential, MatchesSecantForm) {
  // E_1 (2 sec^2(pi x/L) - 1) for the first partner
  const auto v = partner_potential(2, box4);
  for (double x : {-1.9, -0.5, 0.3, 1.2}) {
    const double c = std::cos(pi * x / 4);
    EXPECT_NEAR(v(x), pi * pi / 32 * (2 / (c * c) - 1), 1e-12 * v(x));
  }
}

TEST(PartnerPotential, DivergesMonotonicallyAtWalls) {
  const auto v = partner_potential(2, box4);
  double prev = v(0.0);
  for (double x = 0.1; x < 1.9999; x += 0.05) {
    const double cur = v(x);
    EXPECT_GT(cur, prev);
    prev = cur;
  }
  EXPECT_GT(v(1.99999), 1e8);
  EXPECT_GT(v(-1.99999), 1e8);
}

TEST(Annihilation, KillsBoxGroundState) {
  const auto rule = build_quadrature(400, box4);
  const auto g = apply_annihilation(1, box_wavefunction(1, box4));
  for (double x : rule.nodes) EXPECT_NEAR(g(x), 0.0, 1e-12);
}

TEST(Annihilation, FirstExcitedStateGivesCosSquared) {
  const auto g = apply_annihilation(1, box_wavefunction(2, box4));
  const double c0 = g(0.0);
  EXPECT_GT(std::abs(c0), 0.1);
  for (double x : {-1.7, -0.9, 0.2, 1.1, 1.95}) {
    const double c = std::cos(pi * x / 4);
    EXPECT_NEAR(g(x), c0 * c * c, 1e-13);
    EXPECT_NEAR(g(-x), g(x), 1e-13);
  }
}

TEST(Annihilation, FlipsParity) {
  for (long n = 1; n <= 12; ++n) {
    const auto st = box_wavefunction(n, box4);
    const auto g = apply_annihilation(1, st);
    const double sign = st.parity == Parity::even ? -1.0 : 1.0;  // parity of the image
    for (double x : {0.3, 0.9, 1.6}) EXPECT_NEAR(g(-x), sign * g(x), 1e-12) << "n=" << n;
  }
}

TEST(Hierarchy, ClosedFormsLevelTwo) {
  // psi^(2)_1 = sqrt(8/(3L)) cos^2(pi x/L) and psi^(2)_2 proportional to sin cos^2
  const auto rule = build_quadrature(400, box4);
  const auto g1 = hierarchy_wavefunction(2, 1, box4);
  EXPECT_GT(g1(0.0), 0.0);
  EXPECT_LT(max_abs_difference(g1, [](double x) {
              const double c = std::cos(pi * x / 4);
              return std::sqrt(8.0 / 12.0) * c * c;
            }, rule), 1e-14);
  // int sin^2 cos^4 over the box is L/16
  // the closed form fixes the shape only, so the sign is left free
  const auto g2 = hierarchy_wavefunction(2, 2, box4);
  const double sign = g2(1.0) > 0 ? 1.0 : -1.0;
  EXPECT_LT(max_abs_difference(g2, [sign](double x) {
              const double c = std::cos(pi * x / 4);
              return sign * std::sqrt(16.0 / 4.0) * std::sin(pi * x / 4) * c * c;
            }, rule), 1e-14);
}

TEST(Hierarchy, MatchesExplicitLadderProducts) {
  // level alpha states are (alpha-1)-fold annihilations of box states, up to a sign convention.
  // The oracle cancels tan^2-sized terms near the walls, so its own error grows like sec^2.
  const auto rule = build_quadrature(300, box4);
  for (int alpha : {2, 3}) {
    for (long m = 1; m <= 25; ++m) {
      const long n = m + alpha - 1;
      const auto st = hierarchy_wavefunction(alpha, m, box4);
      const double x0 = 0.37;
      const double sign = st(x0) * ladder_oracle(alpha, n, x0, 4.0) >= 0 ? 1.0 : -1.0;
      double worst = 0.0;
      for (double x : rule.nodes) {
        const double c = std::cos(pi * x / 4);
        worst = std::max(worst, std::abs(st(x) - sign * ladder_oracle(alpha, n, x, 4.0)) * c * c);
      }
      EXPECT_LT(worst, 1e-12) << "alpha=" << alpha << " m=" << m;
    }
  }
}

TEST(Hierarchy, ParitySelectionAndSpectrum) {
  const auto rule = build_quadrature(400, box4);
  EXPECT_NEAR(inner_product(box_wavefunction(2, box4), hierarchy_wavefunction(2, 1, box4), rule), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(hierarchy_wavefunction(3, 1, box4).energy, box_energy(3, box4));
  EXPECT_NEAR(hierarchy_wavefunction(3, 1, box4).energy, 9 * pi * pi / 32, 1e-14);
}

TEST(Hierarchy, SpectrumShiftIsExact) {
  const HierarchyBasis basis(box4);
  for (int alpha = 1; alpha <= 4; ++alpha) {
    for (long m = 1; m <= 500; ++m) {
      ASSERT_EQ(basis.energy(alpha, m), basis.energy(1, m + alpha - 1));
      ASSERT_EQ(hierarchy_wavefunction(alpha, m, box4).energy, box_energy(m + alpha - 1, box4));
    }
  }
}

TEST(Hierarchy, LevelOutsideRangeThrows) {
  const HierarchyBasis basis(box4, 4);
  EXPECT_THROW(basis.state(5, 1), DomainError);
  EXPECT_THROW(basis.state(0, 1), DomainError);
  EXPECT_THROW(hierarchy_wavefunction(2, 0, box4), DomainError);
}

// ---- property suite --------------------------------------------------------------------------

class LevelProperties : public ::testing::TestWithParam<int> {};

TEST_P(LevelProperties, Orthonormality) {
  const int alpha = GetParam();
  const long m_test = 40;
  const auto rule = build_quadrature(400, box4);
  const HierarchyBasis basis(box4);
  const Eigen::MatrixXd psi = basis.tabulate(alpha, m_test, rule.nodes);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), rule.order());
  const Eigen::MatrixXd gram = psi.transpose() * w.asDiagonal() * psi;
  const double err = (gram - Eigen::MatrixXd::Identity(m_test, m_test)).cwiseAbs().maxCoeff();
  EXPECT_LT(err, 1e-10) << "alpha=" << alpha;
}

TEST_P(LevelProperties, EigenvalueResidual) {
  const int alpha = GetParam();
  const auto rule = build_quadrature(400, box4);
  const auto v = partner_potential(alpha, box4);
  const double offset = partner_potential_offset(alpha, box4);
  for (long m = 1; m <= 20; ++m) {
    const auto st = hierarchy_wavefunction(alpha, m, box4);
    const double r2 = integrate([&](double x) {
      const Jet j = st.jet(x);
      const double r = -0.5 * j.curvature + (v(x) + offset) * j.value - st.energy * j.value;
      return r * r;
    }, rule);
    EXPECT_LT(std::sqrt(r2), 1e-6) << "alpha=" << alpha << " m=" << m;
  }
}

TEST_P(LevelProperties, ParityFollowsFlipRule) {
  const int alpha = GetParam();
  for (long m = 1; m <= 30; ++m) {
    const auto st = hierarchy_wavefunction(alpha, m, box4);
    Parity expected = box_wavefunction(m + alpha - 1, box4).parity;
    for (int j = 1; j < alpha; ++j) expected = flip(expected);
    EXPECT_EQ(st.parity, expected);
    const double sign = expected == Parity::even ? 1.0 : -1.0;
    for (double x : {0.21, 0.8, 1.45, 1.9}) {
      EXPECT_NEAR(st(-x), sign * st(x), 1e-12) << "alpha=" << alpha << " m=" << m;
    }
  }
}

TEST_P(LevelProperties, VanishesAtWalls) {
  const int alpha = GetParam();
  for (long m = 1; m <= 10; ++m) {
    const auto st = hierarchy_wavefunction(alpha, m, box4);
    EXPECT_NEAR(st(2.0 - 1e-9), 0.0, 1e-7);
    EXPECT_NEAR(st(-2.0 + 1e-9), 0.0, 1e-7);
  }
}

TEST_P(LevelProperties, TabulatorMatchesPointEvaluator) {
  const int alpha = GetParam();
  const auto rule = build_quadrature(64, box4);
  LevelTabulator tab(alpha, rule.nodes, box4);
  Eigen::MatrixXd a = tab.next_block(7);
  Eigen::MatrixXd b = tab.next_block(30);
  for (long m = 1; m <= 37; ++m) {
    const auto st = hierarchy_wavefunction(alpha, m, box4);
    for (int i = 0; i < rule.order(); ++i) {
      const double ref = st(rule.nodes[i]);
      const double got = m <= 7 ? a(i, m - 1) : b(i, m - 8);
      ASSERT_NEAR(got, ref, 1e-12 * std::max(1.0, std::abs(ref)));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Levels, LevelProperties, ::testing::Values(1, 2, 3, 4));

class GroundAnnihilation : public ::testing::TestWithParam<int> {};

TEST_P(GroundAnnihilation, LevelGroundStateIsAnnihilated) {
  const int alpha = GetParam();
  const auto rule = build_quadrature(400, box4);
  const auto g = apply_annihilation(alpha, hierarchy_wavefunction(alpha, 1, box4));
  double worst = 0.0;
  for (double x : rule.nodes) worst = std::max(worst, std::abs(g(x)));
  EXPECT_LT(worst, 1e-9);
}

TEST_P(GroundAnnihilation, ExcitedStatesMapOneLevelUp) {
  // A_alpha psi^(alpha)_{m+1} = sqrt(E_{m+alpha} - E_alpha) psi^(alpha+1)_m, up to sign
  const int alpha = GetParam();
  const auto rule = build_quadrature(300, box4);
  for (long m = 1; m <= 15; ++m) {
    const auto g = apply_annihilation(alpha, hierarchy_wavefunction(alpha, m + 1, box4));
    const auto up = hierarchy_wavefunction(alpha + 1, m, box4);
    const double gap = std::sqrt(box_energy(m + alpha, box4) - box_energy(alpha, box4));
    const double sign = g(0.41) * up(0.41) >= 0 ? 1.0 : -1.0;
    double worst = 0.0;
    for (double x : rule.nodes) worst = std::max(worst, std::abs(g(x) - sign * gap * up(x)));
    EXPECT_LT(worst, 1e-9 * gap) << "alpha=" << alpha << " m=" << m;
  }
}

INSTANTIATE_TEST_SUITE_P(Levels, GroundAnnihilation, ::testing::Values(1, 2, 3));
