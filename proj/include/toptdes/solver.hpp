#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "toptdes/criterion.hpp"
#include "toptdes/design.hpp"
#include "toptdes/error.hpp"
#include "toptdes/fourier.hpp"

namespace toptdes {

struct SolverOptions {
  int max_outer_iters = 5000;
  int grid_size = 0;  ///< 0 selects 512 m
  double cluster_delta = 1e-3;
  double stop_gap_rel = 1e-6;
  int polish_iters = 200;
  int restarts = 4;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument unless all fields are positive and stop_gap_rel < 1.
  void validate() const;
  int effective_grid_size(int m) const { return grid_size > 0 ? grid_size : 512 * m; }
};

struct SolveReport {
  Design design;
  double t_value = 0.0;
  CertificateReport certificate;
  int iterations = 0;     ///< outer iterations of the successful restart
  int restarts_used = 0;  ///< restarts started, including the successful one
  /// T after each polish phase of the successful restart (non-decreasing).
  std::vector<double> polish_trace;
};

/// Thrown when no restart certifies within max_outer_iters. Carries the best
/// uncertified design seen.
class SolveFailure : public NumericalFailure {
 public:
  SolveFailure(const std::string& what, Design best, double gap_relative)
      : NumericalFailure(what), best_(std::move(best)), gap_relative_(gap_relative) {}
  const Design& best_design() const { return best_; }
  double gap_relative() const { return gap_relative_; }

 private:
  Design best_;
  double gap_relative_;
};

/// Computes a certified T-optimal design.
///
/// Each restart starts from 2m+1 equally spaced points with a random rotation
/// and runs vertex-direction exchange steps (step 1/(k+2) towards the maximizer
/// of psi^2). Every 25 steps the design is clustered, pruned and polished
/// (projected supergradient on weights, coordinate ascent on points), and a
/// Newton solve of the equivalence conditions is attempted from it. The first
/// restart whose design certifies at stop_gap_rel is returned.
SolveReport solve(const DiscriminationProblem& problem, const SolverOptions& opts = {});

/// Solves the optimality system
///   psi(x_i) = s_i h,  psi'(x_i) = 0,  sum_i w_i s_i f(x_i) = 0,  sum_i w_i = 1
/// by damped Newton from `start`, dropping points whose weight turns negative.
/// Returns nullopt if the iteration does not converge. The result is not
/// certified; the caller must check it. `q_start` seeds the nuisance vector;
/// by default it comes from weighted least squares on `start`.
std::optional<Design> refine_equivalence(const DiscriminationProblem& problem,
                                         const Design& start,
                                         const std::optional<NuisanceVector>& q_start = std::nullopt);

/// Support points with weight above `weight_floor` after merging at 1e-3.
int count_support(const Design& design, double weight_floor);

/// Weight floor for counting support in scans. Certified designs carry no
/// numerical dust (every point sits on a maximum of psi^2), but a point that
/// is just entering the support can start with a very small weight.
inline constexpr double kRegionWeightFloor = 1e-6;

/// Inclusive linear grid lo, ..., hi with `count` points (count >= 2, or 1 with lo == hi).
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  int count = 2;

  double at(int i) const;
  /// Parses "lo:hi:n". Throws InvalidArgument on malformed text.
  static Range parse(const std::string& text);
};

/// Three-coefficient families with b0 = 1: M2 is (m=2, k1=1, k2=0),
/// M3 is (m=3, k1=2, k2=1).
enum class RegionCase { M2, M3 };

struct RegionCell {
  double b1 = 0.0;
  double b2 = 0.0;
  int n_support = 0;
  double t_value = 0.0;
  double gap_rel = 0.0;
  bool resolved = false;
};

struct RegionTable {
  std::vector<RegionCell> cells;  ///< b1-major order
};

RegionTable scan_regions(RegionCase region_case, const Range& b1, const Range& b2,
                         const SolverOptions& opts = {}, int jobs = 1,
                         double weight_floor = kRegionWeightFloor);

struct TrajectoryPoint {
  int track = 0;  ///< stable index across rows (nearest-point matching)
  double x = 0.0;
  double weight = 0.0;
};

struct TrajectoryRow {
  double b1 = 0.0;
  bool resolved = false;
  std::vector<TrajectoryPoint> points;  ///< sorted by x
};

struct TrajectoryTable {
  std::vector<TrajectoryRow> rows;
};

/// Certified designs of three_term(m, 1, b1, b2) along the b1 sweep, with
/// support points of adjacent rows linked by nearest circular distance.
TrajectoryTable trace_designs(int m, double b2, const Range& b1, const SolverOptions& opts = {},
                              int jobs = 1, double weight_floor = kRegionWeightFloor);

}  // namespace toptdes
