#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "toptdes/closed_form.hpp"
#include "toptdes/criterion.hpp"
#include "toptdes/error.hpp"
#include "toptdes/solver.hpp"

using namespace toptdes;

namespace {

void expect_matches(const Design& got, const Design& want, double tol) {
  EXPECT_LE(oracle::hausdorff(got.points(), want.points()), tol);
  EXPECT_LE(oracle::weight_tv(got, want), tol);
}

}  // namespace

TEST(Solve, RecoversEqualMassDesign) {
  const auto p = DiscriminationProblem::two_term(2, 1.0, 1.0);
  const SolveReport r = solve(p);
  EXPECT_TRUE(r.certificate.passed);
  expect_matches(r.design, design_thm31(2, 1.0, 1.0), 1e-4);
}

TEST(Solve, RecoversChebyshevDesign) {
  const auto p = DiscriminationProblem::three_term(2, 1.0, 0.0, 0.5);
  const SolveReport r = solve(p);
  EXPECT_EQ(count_support(r.design, kRegionWeightFloor), 3);
  expect_matches(r.design, design_thm41(2, 0.5), 1e-4);
  EXPECT_NEAR(r.t_value, t_value(p, design_thm41(2, 0.5)).t_value, 1e-10);
}

TEST(Solve, TwoPointRegion) {
  const auto p = DiscriminationProblem::three_term(2, 1.0, 0.0, 0.1);
  const SolveReport r = solve(p);
  EXPECT_EQ(count_support(r.design, kRegionWeightFloor), 2);
  EXPECT_TRUE(certify(p, r.design).passed);
}

TEST(Solve, OutputIsIndependentlyCertified) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int m = 2 + trial % 3;
    const auto p = DiscriminationProblem::three_term(m, 1.0, u(rng), u(rng));
    SolverOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial);
    const SolveReport r = solve(p, opts);
    const CertificateReport again = certify(p, r.design, opts.stop_gap_rel);
    EXPECT_TRUE(again.passed);
    EXPECT_LE(again.gap_relative, opts.stop_gap_rel);
    EXPECT_NEAR(r.t_value, t_value(p, r.design).t_value, 1e-12 * r.t_value);
    for (std::size_t i = 1; i < r.polish_trace.size(); ++i) {
      EXPECT_GE(r.polish_trace[i], r.polish_trace[i - 1] - 1e-12);
    }
    EXPECT_GE(r.restarts_used, 1);
  }
}

TEST(Solve, Deterministic) {
  const auto p = DiscriminationProblem::three_term(3, 1.0, 1.0, 1.0);
  EXPECT_EQ(solve(p).design, solve(p).design);
}

TEST(Solve, RotationEquivariance) {
  // Rotating (b1, b2) by m*phi shifts the optimal support by phi.
  const int m = 3;
  const double b1 = 0.8, b2 = 1.7, phi = 0.31;
  const double c = std::cos(m * phi), s = std::sin(m * phi);
  const auto p = DiscriminationProblem::two_term(m, b1, b2);
  const auto rotated = DiscriminationProblem::two_term(m, c * b1 + s * b2, -s * b1 + c * b2);
  const Design a = solve(p).design;
  const Design b = solve(rotated).design;
  std::vector<double> moved;
  for (double x : a.points()) moved.push_back(reduce_angle(x + phi));
  // the optimum is only unique up to shifts by pi/m on this family
  double best = 1e9;
  for (int k = 0; k < 2 * m; ++k) {
    std::vector<double> shifted;
    for (double x : moved) shifted.push_back(reduce_angle(x + k * kPi / m));
    best = std::min(best, oracle::hausdorff(shifted, b.points()));
  }
  EXPECT_LE(best, 1e-3);
}

TEST(Solve, FailureCarriesBestDesign) {
  SolverOptions opts;
  opts.max_outer_iters = 3;
  opts.restarts = 1;
  try {
    solve(DiscriminationProblem::three_term(3, 1.0, 1.0, 1.0), opts);
    FAIL() << "expected SolveFailure";
  } catch (const SolveFailure& f) {
    EXPECT_GT(f.gap_relative(), opts.stop_gap_rel);
  }
}

TEST(Options, Validation) {
  SolverOptions o;
  EXPECT_NO_THROW(o.validate());
  o.stop_gap_rel = 1.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = {};
  o.restarts = 0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = {};
  o.cluster_delta = -1;
  EXPECT_THROW(o.validate(), InvalidArgument);
  EXPECT_EQ(SolverOptions{}.effective_grid_size(3), 1536);
}

TEST(Refine, ConvergesFromPerturbedStart) {
  const auto p = DiscriminationProblem::three_term(3, 1.0, 0.0, 1.0);
  const Design exact = design_thm41(3, 1.0);
  std::vector<double> xs(exact.points()), ws(exact.weights());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] += 0.01 * ((i % 2) ? 1 : -1);
    ws[i] *= 1.0 + 0.05 * ((i % 3) - 1.0);
  }
  const auto refined = refine_equivalence(p, make_design(xs, ws));
  ASSERT_TRUE(refined);
  expect_matches(*refined, exact, 1e-9);
}

TEST(CountSupport, Examples) {
  EXPECT_EQ(count_support(design_thm41(2, 1.0), 1e-4), 3);
  EXPECT_EQ(count_support(design_thm31(3, 1.0, 1.0), 1e-4), 6);
  const std::vector<double> xs{0.0, 1.0, 2.0};
  const std::vector<double> ws{0.5, 0.5, 1e-9};
  EXPECT_EQ(count_support(make_design(xs, ws), 1e-6), 2);
}

TEST(Range, ParseAndAt) {
  const Range r = Range::parse("0:3:4");
  EXPECT_EQ(r.count, 4);
  EXPECT_EQ(r.at(0), 0.0);
  EXPECT_EQ(r.at(3), 3.0);
  EXPECT_NEAR(r.at(1), 1.0, 1e-15);
  const Range single = Range::parse("2:2:1");
  EXPECT_EQ(single.at(0), 2.0);
  EXPECT_THROW(Range::parse("0:1"), InvalidArgument);
  EXPECT_THROW(Range::parse("0:1:x"), InvalidArgument);
  EXPECT_THROW(Range::parse("0:1:1"), InvalidArgument);
  EXPECT_THROW(Range::parse("a:1:3"), InvalidArgument);
  EXPECT_THROW(Range::parse("0:inf:3"), InvalidArgument);
}

TEST(ScanRegions, SmallGridAndDeterministicMerge) {
  const Range b1 = Range::parse("0:2:3");
  const Range b2 = Range::parse("0.1:1:3");
  const RegionTable serial = scan_regions(RegionCase::M2, b1, b2, {}, 1);
  const RegionTable parallel = scan_regions(RegionCase::M2, b1, b2, {}, 3);
  ASSERT_EQ(serial.cells.size(), 9u);
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    const RegionCell& a = serial.cells[i];
    const RegionCell& b = parallel.cells[i];
    EXPECT_EQ(a.b1, b.b1);
    EXPECT_EQ(a.b2, b.b2);
    EXPECT_EQ(a.n_support, b.n_support);
    EXPECT_EQ(a.t_value, b.t_value);
    EXPECT_TRUE(a.resolved);
    EXPECT_TRUE(a.n_support == 2 || a.n_support == 3);
  }
  EXPECT_EQ(serial.cells[0].b1, 0.0);
  EXPECT_EQ(serial.cells[1].b2, 0.55);
  EXPECT_EQ(serial.cells[0].n_support, 2);  // b2 = 0.1 below 0.25
  EXPECT_EQ(serial.cells[2].n_support, 3);  // b2 = 1
}

TEST(ScanRegions, ThreeTermEndpointMatchesClosedForm) {
  const RegionTable t = scan_regions(RegionCase::M3, Range::parse("0:0:1"), Range::parse("1:1:1"));
  ASSERT_EQ(t.cells.size(), 1u);
  EXPECT_EQ(t.cells[0].n_support, 5);
  EXPECT_NEAR(t.cells[0].t_value,
              t_value(DiscriminationProblem::three_term(3, 1, 0, 1), design_thm41(3, 1.0)).t_value, 1e-9);
}

TEST(Trace, RowsSumToOneAndTracksAreStable) {
  const TrajectoryTable t = trace_designs(3, 1.0, Range::parse("0:1:6"), {}, 2);
  ASSERT_EQ(t.rows.size(), 6u);
  for (const auto& row : t.rows) {
    ASSERT_TRUE(row.resolved);
    double total = 0.0;
    for (std::size_t i = 0; i < row.points.size(); ++i) {
      total += row.points[i].weight;
      if (i > 0) EXPECT_LT(row.points[i - 1].x, row.points[i].x);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
  EXPECT_EQ(t.rows.front().points.size(), 5u);
  // Successive rows with equal support size keep their track labels close.
  for (std::size_t r = 1; r < t.rows.size(); ++r) {
    const auto& prev = t.rows[r - 1].points;
    const auto& cur = t.rows[r].points;
    if (prev.size() != cur.size()) continue;
    for (const auto& p : cur) {
      const auto it = std::find_if(prev.begin(), prev.end(), [&](const auto& q) { return q.track == p.track; });
      ASSERT_NE(it, prev.end());
      EXPECT_LT(circular_distance(it->x, p.x), 0.5);
    }
  }
}

// Pure cosine nuisance terms are even, so a design symmetric about zero has a
// rank-one Gram matrix. The certificate must search the whole minimizer set.
TEST(Solve, CertifiesSingularGramOptimum) {
  Eigen::VectorXd b(5);
  b << 0.364871, 1.06359, 3.95489, 1.97541, 1.90486;
  const DiscriminationProblem p(4, 0, 3, b);
  const SolveReport r = solve(p);
  EXPECT_TRUE(r.certificate.passed);
  ASSERT_EQ(r.design.size(), 2u);
  EXPECT_EQ(t_value(p, r.design).gram_rank, 1);
  EXPECT_NEAR(r.design.points()[0] + r.design.points()[1], 2.0 * std::numbers::pi, 1e-6);
  EXPECT_NEAR(r.t_value, 46.48733484, 1e-6);
}

// Near a region boundary the two-point design is within the tolerance of
// optimal; the solver must still find the point entering with a tiny weight.
TEST(Solve, FindsPointEnteringWithTinyWeight) {
  const auto p = DiscriminationProblem::three_term(2, 1.0, 50.0, 0.38);
  const SolveReport r = solve(p);
  EXPECT_TRUE(r.certificate.passed);
  EXPECT_LT(r.certificate.gap_relative, 1e-12);
  ASSERT_EQ(r.design.size(), 3u);
  EXPECT_NEAR(r.design.points()[2], 5.48694, 1e-4);
  EXPECT_NEAR(r.design.weights()[2], 1.39e-4, 1e-5);
  EXPECT_EQ(count_support(r.design, kRegionWeightFloor), 3);
}
