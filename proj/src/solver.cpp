#include "toptdes/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "toptdes/closed_form.hpp"
#include "toptdes/parallel.hpp"

namespace toptdes {

namespace {

constexpr int kPolishPeriod = 25;
constexpr double kPruneFloor = 1e-6;
constexpr double kTiny = 1e-300;
constexpr double kSupportMergeTolerance = 1e-3;
constexpr double kNewtonStartCutoff = 1e-8;
// Certified designs with a relative gap above this get one completion attempt.
constexpr double kCompletionGap = 1e-9;
constexpr double kCompletionMasses[] = {1e-4, 1e-5, 1e-3, 1e-6, 1e-2};
constexpr double kCompletionBand = 1e-2;
// Polish stops once a sweep gains less than this fraction of T; the Newton
// solve takes over from there.
constexpr double kPolishStall = 1e-9;

// (merge tolerance, weight floor) pairs tried, in order, to build the start of
// the Newton solve. Exchange iterates smear each support point over a small
// cluster, so coarse settings usually identify the support; the fine setting
// covers optima with nearly coincident support points.
constexpr std::pair<double, double> kRefineStarts[] = {{1e-2, 1e-3}, {5e-2, 1e-2}, {0.0, 1e-6}};

// Euclidean projection onto the probability simplex (sort-based).
std::vector<double> project_to_simplex(const std::vector<double>& v) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

double gap_relative_of(const DiscriminationProblem& problem, const TResult& tr, const Design& d,
                       int grid, SquaredResidualPeak* peak_out) {
  const TrigPolynomial residual = TrigPolynomial::difference(problem, tr.q_hat);
  const SquaredResidualPeak peak = max_squared_residual(residual, grid, d.points());
  if (peak_out) *peak_out = peak;
  if (tr.t_value <= kTiny) return std::numeric_limits<double>::infinity();
  return (peak.value - tr.t_value) / tr.t_value;
}

// Weighted least squares over a fixed set of basis rows. Polish moves one
// coordinate at a time, so rows are cached and only the moved point is
// re-evaluated.
class RowCache {
 public:
  RowCache(const DiscriminationProblem& problem, const std::vector<double>& xs)
      : problem_(problem), f_(xs.size(), problem.nuisance_size()), g_(xs.size()) {
    for (std::size_t i = 0; i < xs.size(); ++i) set_row(i, xs[i]);
  }

  void set_row(std::size_t i, double x) {
    const auto k = static_cast<Eigen::Index>(i);
    f_.row(k) = nuisance_basis(problem_, x).transpose();
    g_[k] = extra_basis(problem_, x).dot(problem_.extra());
  }

  void keep_rows(const std::vector<std::size_t>& keep) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(keep.size()), f_.cols());
    Eigen::VectorXd g(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
      f.row(static_cast<Eigen::Index>(j)) = f_.row(static_cast<Eigen::Index>(keep[j]));
      g[static_cast<Eigen::Index>(j)] = g_[static_cast<Eigen::Index>(keep[j])];
    }
    f_.swap(f);
    g_.swap(g);
  }

  // T and the minimizer; nullopt when the Gram matrix is numerically singular.
  std::optional<std::pair<double, Eigen::VectorXd>> solve(const std::vector<double>& ws) const {
    const Eigen::Map<const Eigen::VectorXd> w(ws.data(), static_cast<Eigen::Index>(ws.size()));
    const Eigen::MatrixXd wf = w.asDiagonal() * f_;
    const Eigen::MatrixXd gram = f_.transpose() * wf;
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || !(llt.rcond() > kGramEigenCutoff)) return std::nullopt;
    Eigen::VectorXd q = -llt.solve(wf.transpose() * g_);
    const Eigen::VectorXd r = g_ + f_ * q;
    return std::make_pair(w.dot(r.cwiseAbs2()), std::move(q));
  }

 private:
  const DiscriminationProblem& problem_;
  Eigen::MatrixXd f_;
  Eigen::VectorXd g_;
};

// Local ascent on T with the support size fixed: projected supergradient
// steps on the weights and per-point steps towards the local maximum of
// psi^2. Every accepted step strictly increases T.
Design polish(const DiscriminationProblem& problem, const Design& start, int iters) {
  std::vector<double> xs(start.points());
  std::vector<double> ws(start.weights());
  RowCache rows(problem, xs);
  auto sol = rows.solve(ws);
  if (!sol) return start;
  double t = sol->first;
  Eigen::VectorXd q = sol->second;
  double weight_step = 1.0 / std::max(t, kTiny);

  for (int it = 0; it < iters; ++it) {
    const double t_begin = t;

    // weights
    {
      const TrigPolynomial residual = TrigPolynomial::difference(problem, q);
      std::vector<double> grad(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = residual(xs[i]);
        grad[i] = r * r;
      }
      double step = weight_step * 2.0;
      for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
        std::vector<double> trial(ws.size());
        for (std::size_t i = 0; i < ws.size(); ++i) trial[i] = ws[i] + step * grad[i];
        trial = project_to_simplex(trial);
        auto cand = rows.solve(trial);
        if (cand && cand->first > t) {
          ws = std::move(trial);
          t = cand->first;
          q = std::move(cand->second);
          weight_step = step;
          break;
        }
      }
    }

    // drop points the projection zeroed
    {
      std::vector<std::size_t> keep;
      std::vector<double> nx, nw;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ws[i] > 0.0) {
          keep.push_back(i);
          nx.push_back(xs[i]);
          nw.push_back(ws[i]);
        }
      }
      if (keep.size() != xs.size()) rows.keep_rows(keep);
      xs.swap(nx);
      ws.swap(nw);
    }

    // points
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const TrigPolynomial residual = TrigPolynomial::difference(problem, q);
      const TrigPolynomial::Jet j = residual.jet(xs[i]);
      const double d1 = 2.0 * j.value * j.d1;
      const double d2 = 2.0 * (j.d1 * j.d1 + j.value * j.d2);
      if (d1 == 0.0) continue;
      double step = (d2 < 0.0) ? -d1 / d2 : std::copysign(0.05, d1);
      step = std::clamp(step, -0.1, 0.1);
      const double x_old = xs[i];
      bool moved = false;
      for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
        rows.set_row(i, x_old + step);
        auto cand = rows.solve(ws);
        if (cand && cand->first > t) {
          xs[i] = x_old + step;
          t = cand->first;
          q = std::move(cand->second);
          moved = true;
          break;
        }
      }
      if (!moved) rows.set_row(i, x_old);
    }

    if (t - t_begin <= kPolishStall * t) break;
  }
  return make_design(xs, ws);
}

}  // namespace

void SolverOptions::validate() const {
  if (max_outer_iters <= 0 || grid_size < 0 || !(cluster_delta > 0.0) || !(stop_gap_rel > 0.0) ||
      !(stop_gap_rel < 1.0) || polish_iters <= 0 || restarts <= 0) {
    throw InvalidArgument(
        "solver options must be positive (grid_size may be 0 for the default) and stop_gap_rel < 1");
  }
}

namespace {

// Local maxima of the certificate residual's square within kCompletionBand of
// T and away from the current support.
std::vector<double> entering_candidates(const DiscriminationProblem& problem, const Design& design,
                                        const NuisanceVector& q, double t) {
  const TrigPolynomial residual = TrigPolynomial::difference(problem, q);
  const int n = certificate_grid_size(problem.m());
  const double step = kTwoPi / n;
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    const double r = residual(i * step);
    v[i] = r * r;
  }
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    if (v[i] < t * (1.0 - kCompletionBand)) continue;
    if (v[i] < v[(i + n - 1) % n] || v[i] < v[(i + 1) % n]) continue;
    const double x = i * step;
    const bool near_support = std::any_of(design.points().begin(), design.points().end(),
                                          [&](double s) { return circular_distance(s, x) < kSupportMergeTolerance; });
    if (!near_support) out.push_back(x);
  }
  return out;
}

}  // namespace

std::optional<Design> refine_equivalence(const DiscriminationProblem& problem,
                                         const Design& start,
                                         const std::optional<NuisanceVector>& q_start) {
  const int p = problem.nuisance_size();
  // A truncated pseudo-inverse keeps the starting q bounded when the start
  // design sits next to a singular optimum.
  TResult tr0 = t_value(problem, start.points(), start.weights(), kNewtonStartCutoff);
  if (q_start) {
    if (q_start->size() != p) throw InvalidArgument("refine_equivalence: q_start has wrong length");
    tr0.q_hat = *q_start;
    const TrigPolynomial r = TrigPolynomial::difference(problem, tr0.q_hat);
    tr0.t_value = 0.0;
    for (std::size_t i = 0; i < start.size(); ++i) {
      tr0.t_value += start.weights()[i] * r(start.points()[i]) * r(start.points()[i]);
    }
  }
  if (tr0.t_value <= kTiny) return std::nullopt;
  const TrigPolynomial residual0 = TrigPolynomial::difference(problem, tr0.q_hat);

  std::vector<double> xs0;
  std::vector<double> ws0;
  std::vector<double> signs0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    const double r = residual0(start.points()[i]);
    if (r == 0.0) continue;
    xs0.push_back(start.points()[i]);
    ws0.push_back(start.weights()[i]);
    signs0.push_back(r > 0.0 ? 1.0 : -1.0);
  }

  while (!xs0.empty()) {
    const int n = static_cast<int>(xs0.size());
    const int dim = p + 1 + 2 * n;
    Eigen::VectorXd z(dim);
    z.head(p) = tr0.q_hat;
    z[p] = std::sqrt(tr0.t_value);
    const double wsum = std::accumulate(ws0.begin(), ws0.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      z[p + 1 + i] = xs0[i];
      z[p + 1 + n + i] = ws0[i] / wsum;
    }

    auto residual_vector = [&](const Eigen::VectorXd& zz, Eigen::MatrixXd* jac) {
      Eigen::VectorXd fval = Eigen::VectorXd::Zero(dim);
      if (jac) jac->setZero(dim, dim);
      const TrigPolynomial psi_fn = TrigPolynomial::difference(problem, zz.head(p));
      const double h = zz[p];
      for (int i = 0; i < n; ++i) {
        const double x = zz[p + 1 + i];
        const double w = zz[p + 1 + n + i];
        const double s = signs0[i];
        const TrigPolynomial::Jet j = psi_fn.jet(x);
        const Eigen::VectorXd f = nuisance_basis(problem, x);
        const Eigen::VectorXd df = nuisance_basis_derivative(problem, x);
        fval[i] = j.value - s * h;
        fval[n + i] = j.d1;
        fval.segment(2 * n, p) += w * s * f;
        fval[2 * n + p] += w;
        if (jac) {
          jac->block(i, 0, 1, p) = f.transpose();
          (*jac)(i, p) = -s;
          (*jac)(i, p + 1 + i) = j.d1;
          jac->block(n + i, 0, 1, p) = df.transpose();
          (*jac)(n + i, p + 1 + i) = j.d2;
          jac->block(2 * n, p + 1 + i, p, 1) = w * s * df;
          jac->block(2 * n, p + 1 + n + i, p, 1) = s * f;
          (*jac)(2 * n + p, p + 1 + n + i) = 1.0;
        }
      }
      fval[2 * n + p] -= 1.0;
      return fval;
    };

    Eigen::MatrixXd jac;
    Eigen::VectorXd fval = residual_vector(z, &jac);
    double norm = fval.norm();
    const double scale = std::max(1.0, z[p]);
    bool converged = false;
    for (int it = 0; it < 40; ++it) {
      if (norm <= 1e-13 * scale) {
        converged = true;
        break;
      }
      const Eigen::VectorXd delta = jac.completeOrthogonalDecomposition().solve(-fval);
      if (!delta.allFinite()) break;
      double lambda = 1.0;
      bool accepted = false;
      for (int halving = 0; halving < 30; ++halving, lambda *= 0.5) {
        const Eigen::VectorXd trial = z + lambda * delta;
        const Eigen::VectorXd trial_f = residual_vector(trial, nullptr);
        const double trial_norm = trial_f.norm();
        if (trial_norm < norm) {
          z = trial;
          fval = residual_vector(z, &jac);
          norm = trial_norm;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        converged = norm <= 1e-11 * scale;
        break;
      }
    }
    if (!converged) return std::nullopt;

    int most_negative = -1;
    double lowest = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = z[p + 1 + n + i];
      if (w <= 0.0 && w <= lowest) {
        lowest = w;
        most_negative = i;
      }
    }
    if (most_negative < 0) {
      std::vector<double> xs(n), ws(n);
      for (int i = 0; i < n; ++i) {
        xs[i] = z[p + 1 + i];
        ws[i] = z[p + 1 + n + i];
      }
      return make_design(xs, ws);
    }
    xs0.erase(xs0.begin() + most_negative);
    ws0.erase(ws0.begin() + most_negative);
    signs0.erase(signs0.begin() + most_negative);
  }
  return std::nullopt;
}

SolveReport solve(const DiscriminationProblem& problem, const SolverOptions& opts) {
  opts.validate();
  const int m = problem.m();
  const int grid = opts.effective_grid_size(m);
  const int n_init = 2 * m + 1;

  Design best_uncertified;
  double best_uncertified_t = -1.0;
  double best_uncertified_gap = std::numeric_limits<double>::infinity();

  for (int r = 0; r < opts.restarts; ++r) {
    std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> rotation(0.0, kTwoPi / n_init);
    const double phase = rotation(rng);
    std::vector<double> xs(n_init);
    for (int i = 0; i < n_init; ++i) xs[i] = phase + i * kTwoPi / n_init;
    const std::vector<double> ws(n_init, 1.0 / n_init);
    Design design = make_design(xs, ws);

    std::vector<double> polish_trace;
    Design checkpoint = design;
    double checkpoint_t = -1.0;

    auto try_accept = [&](const Design& cand, int iteration) -> std::optional<SolveReport> {
      const TResult tr = t_value(problem, cand);
      if (tr.t_value <= kAnnihilationThreshold) return std::nullopt;
      const CertificateReport rep = certify(problem, cand, opts.stop_gap_rel);
      if (!rep.passed) {
        if (tr.t_value > best_uncertified_t) {
          best_uncertified = cand;
          best_uncertified_t = tr.t_value;
          best_uncertified_gap = rep.gap_relative;
        }
        return std::nullopt;
      }
      SolveReport out;
      out.design = cand;
      out.t_value = tr.t_value;
      out.certificate = rep;
      // A loose certificate can hide a point that is just entering the
      // support at a near-maximal peak of psi^2; a Newton solve with that
      // point added settles it.
      if (rep.gap_relative > kCompletionGap) {
        const NuisanceVector q_cert = certificate_minimizer(problem, cand);
        for (double x : entering_candidates(problem, cand, q_cert, tr.t_value)) {
          // Newton only converges from a mass near the entering weight.
          for (double mass : kCompletionMasses) {
            const auto completed =
                refine_equivalence(problem, convex_combine(cand, point_mass(x), mass), q_cert);
            if (!completed) continue;
            const double t_completed = t_value(problem, *completed).t_value;
            if (!(t_completed > out.t_value)) continue;
            const CertificateReport crep = certify(problem, *completed, opts.stop_gap_rel);
            if (!crep.passed) continue;
            out.design = *completed;
            out.t_value = t_completed;
            out.certificate = crep;
            break;
          }
        }
      }
      out.iterations = iteration;
      out.restarts_used = r + 1;
      out.polish_trace = polish_trace;
      return out;
    };

    for (int k = 0; k < opts.max_outer_iters; ++k) {
      const TResult tr = t_value(problem, design);
      SquaredResidualPeak peak;
      const double gap = gap_relative_of(problem, tr, design, grid, &peak);
      if (gap <= opts.stop_gap_rel) {
        if (auto done = try_accept(design, k + 1)) return *done;
      }

      if ((k + 1) % kPolishPeriod == 0) {
        design = prune(merge_close(design, opts.cluster_delta), kPruneFloor);

        // Newton solve of the equivalence system from a few support guesses;
        // keeps the best uncertified result as the new checkpoint.
        auto refine = [&]() -> std::optional<SolveReport> {
          for (const auto& [merge, floor] : kRefineStarts) {
            const Design start =
                prune(merge_close(design, std::max(merge, opts.cluster_delta)), floor);
            const auto refined = refine_equivalence(problem, start);
            if (!refined) continue;
            if (auto done = try_accept(*refined, k + 1)) return done;
            const double t_refined = t_value(problem, *refined).t_value;
            if (t_refined > checkpoint_t) {
              design = *refined;
              checkpoint = design;
              checkpoint_t = t_refined;
            }
          }
          return std::nullopt;
        };

        if (auto done = refine()) return *done;
        design = polish(problem, design, opts.polish_iters);
        const double t_polished = t_value(problem, design).t_value;
        if (t_polished < checkpoint_t) {
          design = checkpoint;
        } else {
          checkpoint = design;
          checkpoint_t = t_polished;
        }
        polish_trace.push_back(checkpoint_t);
        if (auto done = refine()) return *done;
        continue;
      }

      design = convex_combine(design, point_mass(peak.x), 1.0 / (k + 2));
    }
  }

  std::ostringstream msg;
  msg << "solver did not certify a design within " << opts.max_outer_iters << " iterations x "
      << opts.restarts << " restarts (best gap_relative " << best_uncertified_gap << ")";
  throw SolveFailure(msg.str(), best_uncertified, best_uncertified_gap);
}

int count_support(const Design& design, double weight_floor) {
  if (weight_floor < 0.0) throw InvalidArgument("weight floor must be non-negative");
  const Design merged = merge_close(design, kSupportMergeTolerance);
  return static_cast<int>(std::count_if(merged.weights().begin(), merged.weights().end(),
                                        [&](double w) { return w > weight_floor; }));
}

double Range::at(int i) const {
  if (count == 1) return lo;
  if (i == count - 1) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
}

Range Range::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3) throw InvalidArgument("range must look like lo:hi:n, got '" + text + "'");
  Range r;
  try {
    std::size_t used = 0;
    r.lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw InvalidArgument("");
    r.hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw InvalidArgument("");
    r.count = std::stoi(parts[2], &used);
    if (used != parts[2].size()) throw InvalidArgument("");
  } catch (const std::exception&) {
    throw InvalidArgument("range must look like lo:hi:n, got '" + text + "'");
  }
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.count < 1 ||
      (r.count == 1 && r.lo != r.hi)) {
    throw InvalidArgument("range '" + text + "' needs finite bounds and n >= 2");
  }
  return r;
}

RegionTable scan_regions(RegionCase region_case, const Range& b1, const Range& b2,
                         const SolverOptions& opts, int jobs, double weight_floor) {
  const int m = (region_case == RegionCase::M2) ? 2 : 3;
  RegionTable table;
  table.cells.resize(static_cast<std::size_t>(b1.count) * b2.count);
  parallel_for(table.cells.size(), jobs, [&](std::size_t idx) {
    RegionCell& cell = table.cells[idx];
    cell.b1 = b1.at(static_cast<int>(idx / b2.count));
    cell.b2 = b2.at(static_cast<int>(idx % b2.count));
    const auto problem = DiscriminationProblem::three_term(m, 1.0, cell.b1, cell.b2);
    try {
      const SolveReport rep = solve(problem, opts);
      cell.n_support = count_support(rep.design, weight_floor);
      cell.t_value = rep.t_value;
      cell.gap_rel = rep.certificate.gap_relative;
      cell.resolved = true;
    } catch (const SolveFailure& e) {
      cell.gap_rel = e.gap_relative();
      cell.resolved = false;
    }
  });
  return table;
}

TrajectoryTable trace_designs(int m, double b2, const Range& b1, const SolverOptions& opts,
                              int jobs, double weight_floor) {
  TrajectoryTable table;
  table.rows.resize(b1.count);
  std::vector<Design> designs(b1.count);
  parallel_for(table.rows.size(), jobs, [&](std::size_t i) {
    TrajectoryRow& row = table.rows[i];
    row.b1 = b1.at(static_cast<int>(i));
    const auto problem = DiscriminationProblem::three_term(m, 1.0, row.b1, b2);
    try {
      designs[i] = prune(merge_close(solve(problem, opts).design, kSupportMergeTolerance),
                         weight_floor);
      row.resolved = true;
    } catch (const SolveFailure&) {
      row.resolved = false;
    }
  });

  // Link tracks sequentially: greedy nearest pairs against the last resolved row.
  int next_track = 0;
  const TrajectoryRow* previous = nullptr;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    TrajectoryRow& row = table.rows[i];
    if (!row.resolved) continue;
    const Design& d = designs[i];
    row.points.resize(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
      row.points[j] = {-1, d.points()[j], d.weights()[j]};
    }
    if (previous) {
      struct Pair {
        double dist;
        std::size_t cur;
        std::size_t prev;
      };
      std::vector<Pair> pairs;
      for (std::size_t a = 0; a < row.points.size(); ++a) {
        for (std::size_t b = 0; b < previous->points.size(); ++b) {
          pairs.push_back({circular_distance(row.points[a].x, previous->points[b].x), a, b});
        }
      }
      std::sort(pairs.begin(), pairs.end(), [](const Pair& u, const Pair& v) {
        if (u.dist != v.dist) return u.dist < v.dist;
        if (u.cur != v.cur) return u.cur < v.cur;
        return u.prev < v.prev;
      });
      std::vector<bool> prev_used(previous->points.size(), false);
      for (const Pair& pr : pairs) {
        if (row.points[pr.cur].track >= 0 || prev_used[pr.prev]) continue;
        row.points[pr.cur].track = previous->points[pr.prev].track;
        prev_used[pr.prev] = true;
      }
    }
    for (TrajectoryPoint& pt : row.points) {
      if (pt.track < 0) pt.track = next_track++;
    }
    previous = &row;
  }
  return table;
}

}  // namespace toptdes
