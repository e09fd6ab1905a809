#include "toptdes/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "toptdes/error.hpp"
#include "toptdes/fourier.hpp"

namespace toptdes {

namespace {

constexpr double kRenormalizeSlack = 1e-15;

struct Atom {
  double x;
  double w;
};

// Merges runs of neighbours (sorted, reduced) with gap <= tol, including the
// wraparound pair between the last and first atom.
std::vector<Atom> cluster(std::vector<Atom> atoms, double tol) {
  const std::size_t n = atoms.size();
  if (n < 2) return atoms;

  auto gap = [&](std::size_t i) {
    const std::size_t j = (i + 1) % n;
    double d = atoms[j].x - atoms[i].x;
    if (j == 0) d += kTwoPi;
    return d;
  };

  // Start the scan right after a gap that separates clusters, so that no
  // cluster straddles the scan origin.
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (gap(i) > tol) {
      start = (i + 1) % n;
      break;
    }
  }

  std::vector<Atom> out;
  if (start == n) {
    // Everything is chained together.
    double sx = 0.0, cx = 0.0, w = 0.0;
    for (const Atom& a : atoms) {
      sx += a.w * std::sin(a.x);
      cx += a.w * std::cos(a.x);
      w += a.w;
    }
    out.push_back({reduce_angle(std::atan2(sx, cx)), w});
    return out;
  }

  std::size_t k = 0;
  while (k < n) {
    const std::size_t first = (start + k) % n;
    std::size_t len = 1;
    while (k + len < n && gap((start + k + len - 1) % n) <= tol) ++len;
    if (len == 1) {
      out.push_back(atoms[first]);
    } else {
      // Weighted circular mean, computed relative to the first member to
      // stay exact for tight clusters.
      const double ref = atoms[first].x;
      double num = 0.0;
      double w = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        const Atom& a = atoms[(start + k + t) % n];
        double d = a.x - ref;
        if (d < 0.0) d += kTwoPi;
        num += a.w * d;
        w += a.w;
      }
      out.push_back({reduce_angle(ref + num / w), w});
    }
    k += len;
  }
  std::sort(out.begin(), out.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  return out;
}

}  // namespace

double reduce_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double circular_distance(double a, double b) {
  const double d = std::abs(reduce_angle(a) - reduce_angle(b));
  return std::min(d, kTwoPi - d);
}

Design make_design(std::span<const double> points, std::span<const double> weights,
                   double merge_tolerance) {
  if (points.empty()) throw InvalidArgument("design needs at least one support point");
  if (points.size() != weights.size()) {
    throw InvalidArgument("design has " + std::to_string(points.size()) + " points but " +
                          std::to_string(weights.size()) + " weights");
  }
  std::vector<Atom> atoms;
  atoms.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i])) throw InvalidArgument("design point is not finite");
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw InvalidArgument("design weights must be finite and non-negative");
    }
    if (weights[i] > 0.0) atoms.push_back({reduce_angle(points[i]), weights[i]});
  }
  if (atoms.empty()) throw InvalidArgument("design weights are all zero");

  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) { return a.x < b.x; });
  atoms = cluster(std::move(atoms), merge_tolerance);

  double total = 0.0;
  for (const Atom& a : atoms) total += a.w;
  const bool renormalize = std::abs(total - 1.0) > kRenormalizeSlack;

  std::vector<double> xs;
  std::vector<double> ws;
  xs.reserve(atoms.size());
  ws.reserve(atoms.size());
  for (const Atom& a : atoms) {
    xs.push_back(a.x);
    ws.push_back(renormalize ? a.w / total : a.w);
  }
  return Design(std::move(xs), std::move(ws));
}

Design merge_close(const Design& design, double tolerance) {
  if (tolerance < 0.0) throw InvalidArgument("merge tolerance must be non-negative");
  return make_design(design.points(), design.weights(),
                     std::max(tolerance, kCanonicalMergeTolerance));
}

Design convex_combine(const Design& first, const Design& second, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidArgument("convex_combine requires alpha in [0, 1]");
  }
  if (alpha == 0.0) return first;
  if (alpha == 1.0) return second;
  std::vector<double> xs(first.points());
  xs.insert(xs.end(), second.points().begin(), second.points().end());
  std::vector<double> ws;
  ws.reserve(xs.size());
  for (double w : first.weights()) ws.push_back((1.0 - alpha) * w);
  for (double w : second.weights()) ws.push_back(alpha * w);
  return make_design(xs, ws);
}

Design prune(const Design& design, double floor) {
  std::vector<double> xs;
  std::vector<double> ws;
  for (std::size_t i = 0; i < design.size(); ++i) {
    if (design.weights()[i] > floor) {
      xs.push_back(design.points()[i]);
      ws.push_back(design.weights()[i]);
    }
  }
  if (xs.empty()) return design;
  return make_design(xs, ws);
}

Design point_mass(double x) {
  const double w = 1.0;
  return make_design(std::span<const double>(&x, 1), std::span<const double>(&w, 1));
}

}  // namespace toptdes
