#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace toptdes {

/// Approximate design: a probability measure with finite support on the
/// circle [0, 2pi). Instances are always canonical: points strictly increasing
/// in [0, 2pi), weights strictly positive and summing to one.
class Design {
 public:
  /// Unit mass at 0.
  Design() : points_{0.0}, weights_{1.0} {}

  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return points_.size(); }

  bool operator==(const Design&) const = default;

 private:
  friend Design make_design(std::span<const double>, std::span<const double>, double);
  Design(std::vector<double> points, std::vector<double> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {}

  std::vector<double> points_;
  std::vector<double> weights_;
};

inline constexpr double kCanonicalMergeTolerance = 1e-9;

/// Reduces an angle into [0, 2pi).
double reduce_angle(double x);

/// min(|a-b|, 2pi-|a-b|) after reduction.
double circular_distance(double a, double b);

/// Builds the canonical design: points reduced mod 2pi, sorted together with
/// their weights, zero weights dropped, points closer than `merge_tolerance`
/// merged, and weights renormalized.
///
/// Throws InvalidArgument for empty or mismatched input, negative or
/// non-finite weights, non-finite points, or all-zero weights.
Design make_design(std::span<const double> points, std::span<const double> weights,
                   double merge_tolerance = kCanonicalMergeTolerance);

/// Clusters points whose circular distance is at most `tolerance` (single
/// linkage around the circle) and replaces each cluster by its weighted
/// circular mean carrying the summed weight.
Design merge_close(const Design& design, double tolerance);

/// (1-alpha) * first + alpha * second as measures.
Design convex_combine(const Design& first, const Design& second, double alpha);

/// Drops support points with weight <= floor and renormalizes. Returns the
/// input unchanged if that would remove every point.
Design prune(const Design& design, double floor);

/// Single-point design.
Design point_mass(double x);

}  // namespace toptdes
