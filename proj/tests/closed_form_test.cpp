#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "toptdes/closed_form.hpp"
#include "toptdes/criterion.hpp"
#include "toptdes/error.hpp"

using namespace toptdes;

namespace {

void expect_certified(const DiscriminationProblem& p, const Design& d, double tol = 1e-7) {
  const CertificateReport rep = certify(p, d, tol);
  EXPECT_TRUE(rep.passed) << "gap_relative " << rep.gap_relative << " support_dev " << rep.support_dev;
  EXPECT_LE(rep.gap_relative, tol);
}

std::vector<double> shifted(const std::vector<double>& xs, double by) {
  std::vector<double> out;
  for (double x : xs) out.push_back(reduce_angle(x + by));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Threshold, Values) {
  EXPECT_NEAR(threshold(2), 0.25, 1e-15);
  EXPECT_NEAR(threshold(3), 0.5, 1e-15);
  EXPECT_NEAR(threshold(5), 0.94721359549995794, 1e-12);
  EXPECT_THROW(threshold(1), InvalidArgument);
  EXPECT_FALSE(closed_form_case(CaseTag::THM31, 3).threshold.has_value());
  EXPECT_NEAR(*closed_form_case(CaseTag::REM34, 4).threshold, threshold(4), 0.0);
}

TEST(EqualMass, SixPointExample) {
  const Design d = design_thm31(3, 1.0, 1.0);
  const double expected[] = {kPi / 12, 5 * kPi / 12, 3 * kPi / 4, 13 * kPi / 12, 17 * kPi / 12, 7 * kPi / 4};
  ASSERT_EQ(d.size(), 6u);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(d.points()[i], expected[i], 1e-12);
    EXPECT_NEAR(d.weights()[i], 1.0 / 6, 1e-12);
  }
}

TEST(EqualMass, ZeroRatioAndSmallM) {
  const Design d = design_thm31(1, 1.0, 0.0);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d.points()[0], kPi / 2, 1e-15);
  EXPECT_NEAR(d.points()[1], 3 * kPi / 2, 1e-15);
  const Design e = design_thm31(2, 1.0, 2.0);
  ASSERT_EQ(e.size(), 4u);
  EXPECT_NEAR(e.points()[0], 0.5 * std::atan(0.5), 1e-15);
  EXPECT_NEAR(e.points()[1] - e.points()[0], kPi / 2, 1e-14);
  expect_certified(DiscriminationProblem::two_term(2, 1.0, 2.0), e);
  EXPECT_THROW(design_thm31(2, 0.0, 1.0), InvalidArgument);
}

TEST(EqualMass, ZeroCoefficientDesigns) {
  const Design a = design_cor32(2, ZeroCoefficient::B1);
  ASSERT_EQ(a.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(a.points()[i], i * kPi / 2, 1e-15);
    EXPECT_EQ(a.weights()[i], 0.25);
  }
  const Design b = design_cor32(1, ZeroCoefficient::B2);
  EXPECT_NEAR(b.points()[0], kPi / 2, 1e-15);
  EXPECT_NEAR(b.points()[1], 3 * kPi / 2, 1e-15);
  expect_certified(DiscriminationProblem::two_term(3, 0.0, 1.0), design_cor32(3, ZeroCoefficient::B1));
}

TEST(EqualMass, CriterionIsSumOfSquares) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + trial % 5;
    double b1 = u(rng);
    if (std::abs(b1) < 1e-3) b1 = 1.0;
    const double b2 = u(rng);
    const auto p = DiscriminationProblem::two_term(m, b1, b2);
    const TResult r = t_value(p, design_thm31(m, b1, b2));
    const double expected = b1 * b1 + b2 * b2;
    EXPECT_NEAR(r.t_value, expected, 1e-10 * expected);
    EXPECT_LT(r.q_hat.cwiseAbs().maxCoeff(), 1e-10 * std::sqrt(expected));
  }
}

TEST(Chebyshev, HalfDesignExample) {
  const ChebyshevNodes n = support_weights_41(5, 2.0);
  ASSERT_EQ(n.points.size(), 5u);
  EXPECT_EQ(n.points[0], 0.0);
  // evaluated independently in double precision with Python's math.acos
  const double expected[] = {0.0, 0.644387511613264, 1.29276007701277, 1.9546191207921473,
                             2.689346526968665};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(n.points[i], expected[i], 1e-12);
  const double w[] = {0.2, 0.181, 0.131, 0.069, 0.019};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(n.weights[i], w[i], 5e-4);
  EXPECT_EQ(n.weights[0], 0.2);
  for (int i = 1; i < 5; ++i) EXPECT_LT(n.weights[i], n.weights[i - 1]);
  double total = n.weights[0];
  for (int i = 1; i < 5; ++i) total += 2 * n.weights[i];
  EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(Chebyshev, BoundaryAndBelowThreshold) {
  const ChebyshevNodes n = support_weights_41(2, 0.25);
  EXPECT_NEAR(n.points[1], kPi, 1e-7);
  try {
    design_thm41(2, 0.1);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("below validity threshold 0.25"), std::string::npos) << e.what();
  }
  EXPECT_THROW(design_thm42(4, 2.0), InvalidArgument);
  EXPECT_THROW(design_rem34(3, 2.0), InvalidArgument);
  EXPECT_THROW(design_rem34(4, 0.5), InvalidArgument);
}

TEST(Chebyshev, CriterionIsEquioscillationAmplitude) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 4;
    const double lo = threshold(m);
    const double b = std::uniform_real_distribution<double>(lo, lo + 5.0)(rng) * (trial % 3 ? 1.0 : -1.0);
    const auto p = DiscriminationProblem::three_term(m, 1.0, 0.0, b);
    const Design d = design_thm41(m, b);
    EXPECT_EQ(d.size(), static_cast<std::size_t>(2 * m - 1));
    const double a = 1.0 / (2 * m * std::abs(b));
    const double expected = b * b * std::pow(1 + a, 2 * m);
    EXPECT_NEAR(t_value(p, d).t_value, expected, 1e-10 * expected);
  }
}

TEST(Chebyshev, ExtremalPolynomialIsTheResidual) {
  // psi from least squares at the closed-form design equals the Chebyshev
  // composition everywhere, and the composition matches its monomial form.
  struct Case {
    CaseTag tag;
    int m;
    double b;
  };
  std::vector<Case> cases;
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 160; ++trial) {
    const int m = 2 + (trial / 4) % 4;
    const double mag = std::uniform_real_distribution<double>(threshold(m), threshold(m) + 4.0)(rng);
    switch (trial % 4) {
      case 0: cases.push_back({CaseTag::THM41_POS, m, mag}); break;
      case 1: cases.push_back({CaseTag::THM41_NEG, m, -mag}); break;
      case 2:
        if (m % 2 == 1) cases.push_back({trial % 8 < 4 ? CaseTag::THM42_POS : CaseTag::THM42_NEG, m,
                                         trial % 8 < 4 ? mag : -mag});
        break;
      default:
        if (m % 2 == 0) cases.push_back({CaseTag::REM34, m, mag});
        break;
    }
  }
  ASSERT_GE(cases.size(), 100u);
  for (const Case& c : cases) {
    DiscriminationProblem p = DiscriminationProblem::three_term(c.m, 1.0, 0.0, c.b);
    Design d = design_thm41(c.m, c.b);
    if (c.tag == CaseTag::THM42_POS || c.tag == CaseTag::THM42_NEG) {
      p = DiscriminationProblem::three_term(c.m, 1.0, c.b, 0.0);
      d = design_thm42(c.m, c.b);
    } else if (c.tag == CaseTag::REM34) {
      p = DiscriminationProblem::three_term_sine(c.m, 1.0, 0.0, c.b);
      d = design_rem34(c.m, c.b);
    }
    const TResult r = t_value(p, d);
    const double amp = std::sqrt(r.t_value);
    const double a = 1.0 / (2 * c.m * std::abs(c.b));
    for (int i = 0; i < 50; ++i) {
      const double x = kTwoPi * i / 50.0;
      const double v = extremal_psi(c.tag, c.m, c.b, x);
      EXPECT_NEAR(v, psi(p, r.q_hat, x), 1e-9 * amp) << to_string(c.tag) << " m=" << c.m << " b=" << c.b;
      EXPECT_LE(std::abs(v), amp * (1 + 1e-9));
    }
    if (c.tag == CaseTag::THM41_POS) {
      const double x = 0.77;
      const double t = (-std::cos(x) - a) / (1 + a);
      const double mono = std::pow(-1.0, c.m) * c.b * std::pow(1 + a, c.m) * oracle::chebyshev_monomial(c.m, t);
      EXPECT_NEAR(extremal_psi(c.tag, c.m, c.b, x), mono, 1e-10 * amp);
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_NEAR(std::abs(extremal_psi(c.tag, c.m, c.b, d.points()[i])), amp, 1e-9 * amp);
    }
  }
}

TEST(Chebyshev, ExtremalExamples) {
  EXPECT_NEAR(std::abs(extremal_psi(CaseTag::THM41_POS, 5, 2.0, 0.0)), 2 * std::pow(1.05, 5), 1e-12);
  EXPECT_NEAR(std::abs(extremal_psi(CaseTag::THM41_POS, 2, 1.0, 0.0)), 1.5625, 1e-14);
  const double amp = 2 * std::pow(1.05, 5);
  const double grid_max =
      oracle::max_abs_on_grid([](double x) { return extremal_psi(CaseTag::THM41_POS, 5, 2.0, x); });
  EXPECT_NEAR(grid_max, amp, 1e-8);
  EXPECT_THROW(extremal_psi(CaseTag::THM41_POS, 2, 0.1, 0.0), InvalidArgument);
  EXPECT_NEAR(extremal_psi_thm31(3, 1.0, 1.0, 0.2), std::sin(0.6) + std::cos(0.6), 1e-15);
}

TEST(Shifts, QuarterTurnAndThreeQuarterTurn) {
  for (int m : {3, 5}) {
    for (double b : {2.0, -2.0, 1.3}) {
      const Design d41 = design_thm41(m, b);
      const Design d42 = design_thm42(m, b);
      const auto moved = shifted(d41.points(), kPi / 2);
      ASSERT_EQ(moved.size(), d42.size());
      for (std::size_t i = 0; i < moved.size(); ++i) EXPECT_NEAR(d42.points()[i], moved[i], 1e-12);
    }
  }
  for (int m : {2, 4}) {
    const Design d41 = design_thm41(m, 1.0);
    const Design d34 = design_rem34(m, 1.0);
    const auto moved = shifted(d41.points(), 3 * kPi / 2);
    ASSERT_EQ(moved.size(), d34.size());
    for (std::size_t i = 0; i < moved.size(); ++i) EXPECT_NEAR(d34.points()[i], moved[i], 1e-12);
    std::vector<double> w41(d41.weights()), w34(d34.weights());
    std::sort(w41.begin(), w41.end());
    std::sort(w34.begin(), w34.end());
    for (std::size_t i = 0; i < w41.size(); ++i) EXPECT_NEAR(w41[i], w34[i], 1e-15);
  }
}

TEST(Certified, AllFamilies) {
  expect_certified(DiscriminationProblem::three_term(2, 1, 0, 1), design_thm41(2, 1.0));
  expect_certified(DiscriminationProblem::three_term(2, 1, 0, -1), design_thm41(2, -1.0));
  expect_certified(DiscriminationProblem::three_term(3, 1, 1, 0), design_thm42(3, 1.0));
  expect_certified(DiscriminationProblem::three_term(5, 1, -2, 0), design_thm42(5, -2.0));
  expect_certified(DiscriminationProblem::three_term_sine(2, 1, 0, 1), design_rem34(2, 1.0));
  expect_certified(DiscriminationProblem::three_term_sine(4, 1, 0, 1), design_rem34(4, 1.0));
  expect_certified(DiscriminationProblem::three_term_sine(2, 1, 0, -1), design_rem34(2, -1.0));
}

TEST(Dispatch, RecognizesFamilies) {
  auto tag_of = [](const DiscriminationProblem& p) { return closed_form_for(p).value().tag; };
  EXPECT_EQ(tag_of(DiscriminationProblem::two_term(3, 1, 1)), CaseTag::THM31);
  EXPECT_EQ(tag_of(DiscriminationProblem::two_term(3, 0, 1)), CaseTag::COR32_B1_ZERO);
  EXPECT_EQ(tag_of(DiscriminationProblem::two_term(3, 1, 0)), CaseTag::COR32_B2_ZERO);
  EXPECT_EQ(tag_of(DiscriminationProblem::three_term(3, 1, 0, 2)), CaseTag::THM41_POS);
  EXPECT_EQ(tag_of(DiscriminationProblem::three_term(3, 1, 0, -2)), CaseTag::THM41_NEG);
  EXPECT_EQ(tag_of(DiscriminationProblem::three_term(3, 1, 2, 0)), CaseTag::THM42_POS);
  EXPECT_EQ(tag_of(DiscriminationProblem::three_term(3, 1, -2, 0)), CaseTag::THM42_NEG);
  EXPECT_EQ(tag_of(DiscriminationProblem::three_term_sine(4, 1, 0, 2)), CaseTag::REM34);
  // rescaled by b0
  const auto scaled = closed_form_for(DiscriminationProblem::three_term(3, 2, 0, 4));
  ASSERT_TRUE(scaled);
  EXPECT_NEAR(scaled->t_value, 4 * t_value(DiscriminationProblem::three_term(3, 1, 0, 2), design_thm41(3, 2)).t_value,
              1e-9);
  EXPECT_FALSE(closed_form_for(DiscriminationProblem::three_term(3, 1, 1, 1)));
  EXPECT_FALSE(closed_form_for(DiscriminationProblem::three_term(2, 1, 0, 0.1)));
}
