#include "toptdes/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "toptdes/error.hpp"

namespace toptdes {

namespace {

constexpr double kRefineBand = 1e-3;
constexpr int kNewtonSteps = 40;
// Relative excess of the stationary choice that triggers the minimax search.
constexpr double kMinimaxTrigger = 1e-10;
constexpr int kMinimaxRounds = 12;

// Polishes a local maximizer of psi^2 by Newton on its derivative. Steps are
// capped at `max_step` so the iterate stays in the basin found on the grid.
SquaredResidualPeak refine_peak(const TrigPolynomial& residual, double x, double max_step) {
  TrigPolynomial::Jet j = residual.jet(x);
  SquaredResidualPeak best{x, j.value * j.value};
  for (int it = 0; it < kNewtonSteps; ++it) {
    const double d1 = 2.0 * j.value * j.d1;
    const double d2 = 2.0 * (j.d1 * j.d1 + j.value * j.d2);
    if (!(d2 < 0.0)) break;
    const double step = std::clamp(-d1 / d2, -max_step, max_step);
    x += step;
    j = residual.jet(x);
    const double v = j.value * j.value;
    if (v >= best.value) best = {x, v};
    if (std::abs(step) < 1e-15) break;
  }
  best.x = reduce_angle(best.x);
  return best;
}

struct InnerSolution {
  TResult result;
  Eigen::MatrixXd null_basis;  // eigenvectors dropped by the cutoff
};

InnerSolution solve_inner(const DiscriminationProblem& problem, std::span<const double> points,
                          std::span<const double> weights, double eigen_cutoff) {
  if (points.size() != weights.size()) {
    throw InvalidArgument("t_value: points and weights differ in length");
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  const int p = problem.nuisance_size();
  Eigen::MatrixXd f(n, p);
  Eigen::VectorXd g(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = points[i];
    f.row(i) = nuisance_basis(problem, x).transpose();
    g[i] = extra_basis(problem, x).dot(problem.extra());
    w[i] = weights[i];
  }

  const Eigen::MatrixXd gram = f.transpose() * w.asDiagonal() * f;
  const Eigen::VectorXd rhs = f.transpose() * w.asDiagonal() * g;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = eigen_cutoff * lambda.maxCoeff();

  InnerSolution out;
  TResult& res = out.result;
  res.q_hat = Eigen::VectorXd::Zero(p);
  std::vector<int> dropped;
  for (int k = 0; k < p; ++k) {
    if (lambda[k] > cutoff) {
      const Eigen::VectorXd v = eig.eigenvectors().col(k);
      res.q_hat -= v * (v.dot(rhs) / lambda[k]);
      ++res.gram_rank;
    } else {
      dropped.push_back(k);
    }
  }
  const Eigen::VectorXd r = g + f * res.q_hat;
  res.t_value = w.dot(r.cwiseAbs2());
  out.null_basis.resize(p, static_cast<Eigen::Index>(dropped.size()));
  for (std::size_t j = 0; j < dropped.size(); ++j) {
    out.null_basis.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(dropped[j]);
  }
  return out;
}

// Among the inner minimizers q_hat + N t (N spans the Gram null space), picks
// the one whose residual is stationary at the support points in the weighted
// least-squares sense. Stationarity is necessary for psi^2 to peak there.
NuisanceVector stationary_minimizer(const DiscriminationProblem& problem, const Design& design,
                                    const InnerSolution& inner) {
  const Eigen::MatrixXd& null_basis = inner.null_basis;
  if (null_basis.cols() == 0) return inner.result.q_hat;
  const TrigPolynomial residual = TrigPolynomial::difference(problem, inner.result.q_hat);
  const auto n = static_cast<Eigen::Index>(design.size());
  Eigen::MatrixXd a(n, null_basis.cols());
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = design.points()[i];
    const double sw = std::sqrt(design.weights()[i]);
    a.row(i) = sw * (nuisance_basis_derivative(problem, x).transpose() * null_basis);
    b[i] = -sw * residual.jet(x).d1;
  }
  const Eigen::VectorXd t = a.completeOrthogonalDecomposition().solve(b);
  return inner.result.q_hat + null_basis * t;
}

// Solves min_t max_j |a_j + g_j t| by a log-barrier method on (t, s) with
// constraints -s <= a_j + g_j t <= s. Starts from `t`, which need not be
// optimal; any start is strictly feasible once s exceeds the current maximum.
Eigen::VectorXd chebyshev_fit(const Eigen::VectorXd& a_raw, const Eigen::MatrixXd& g_raw,
                              Eigen::VectorXd t) {
  const Eigen::Index n = a_raw.size();
  const Eigen::Index k = g_raw.cols();
  const double scale = std::max((a_raw + g_raw * t).cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::VectorXd a = a_raw / scale;
  const Eigen::MatrixXd g = g_raw / scale;

  double s = (a + g * t).cwiseAbs().maxCoeff() * 1.01 + 1e-3;
  auto barrier = [&](const Eigen::VectorXd& tt, double ss, double tau) {
    const Eigen::VectorXd r = a + g * tt;
    double phi = tau * ss;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double u = ss - r[j];
      const double l = ss + r[j];
      if (!(u > 0.0) || !(l > 0.0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(u) + std::log(l);
    }
    return phi;
  };

  const double count = 2.0 * static_cast<double>(n);
  for (double tau = count; count / tau > 1e-12; tau *= 10.0) {
    for (int it = 0; it < 60; ++it) {
      const Eigen::VectorXd r = a + g * t;
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(k + 1);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(k + 1, k + 1);
      grad[k] = tau;
      Eigen::VectorXd c(k + 1);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double iu = 1.0 / (s - r[j]);
        const double il = 1.0 / (s + r[j]);
        grad.head(k) += (iu - il) * g.row(j).transpose();
        grad[k] -= iu + il;
        c.head(k) = g.row(j).transpose();
        c[k] = 1.0;
        hess.noalias() += (il * il) * c * c.transpose();
        c.head(k) = -c.head(k);
        hess.noalias() += (iu * iu) * c * c.transpose();
      }
      hess.diagonal().array() += 1e-14 * hess.diagonal().maxCoeff();
      const Eigen::VectorXd step = -hess.ldlt().solve(grad);
      const double decrement = -grad.dot(step);
      if (!std::isfinite(decrement) || decrement < 1e-12) break;
      const double phi0 = barrier(t, s, tau);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        const Eigen::VectorXd tt = t + alpha * step.head(k);
        const double ss = s + alpha * step[k];
        if (barrier(tt, ss, tau) <= phi0 - 0.25 * alpha * decrement) {
          t = tt;
          s = ss;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
  }
  return t;
}

// Among the inner minimizers q0 + N t, finds the one minimizing the peak of
// psi^2. Only differs from q0 when the Gram matrix is singular. Grid
// constraints are supplemented with the continuous peaks found so far.
NuisanceVector minimax_minimizer(const DiscriminationProblem& problem, const Design& design,
                                 const Eigen::MatrixXd& null_basis, const NuisanceVector& q0,
                                 int grid_size) {
  // A coarse constraint grid suffices: the cutting-plane rounds add the
  // continuous peaks that it misses.
  const int coarse = std::min(grid_size, 128 * (problem.m() + 1));
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(coarse) + design.size() + kMinimaxRounds);
  const double step = kTwoPi / coarse;
  for (int i = 0; i < coarse; ++i) xs.push_back(i * step);
  xs.insert(xs.end(), design.points().begin(), design.points().end());

  const TrigPolynomial base = TrigPolynomial::difference(problem, q0);
  NuisanceVector best_q = q0;
  double best_peak = max_squared_residual(base, grid_size, design.points()).value;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(null_basis.cols());
  for (int round = 0; round < kMinimaxRounds; ++round) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::VectorXd a(n);
    Eigen::MatrixXd g(n, null_basis.cols());
    for (Eigen::Index j = 0; j < n; ++j) {
      a[j] = base(xs[j]);
      g.row(j) = nuisance_basis(problem, xs[j]).transpose() * null_basis;
    }
    t = chebyshev_fit(a, g, t);
    const double level = (a + g * t).cwiseAbs().maxCoeff();
    const NuisanceVector q = q0 + null_basis * t;
    const SquaredResidualPeak peak = max_squared_residual(
        TrigPolynomial::difference(problem, q), grid_size, design.points());
    if (peak.value < best_peak) {
      best_peak = peak.value;
      best_q = q;
    }
    if (peak.value <= level * level * (1.0 + 1e-13)) break;
    xs.push_back(peak.x);
  }
  return best_q;
}

}  // namespace

TResult t_value(const DiscriminationProblem& problem, const Design& design) {
  return t_value(problem, design.points(), design.weights());
}

TResult t_value(const DiscriminationProblem& problem, std::span<const double> points,
                std::span<const double> weights, double eigen_cutoff) {
  return solve_inner(problem, points, weights, eigen_cutoff).result;
}

double psi(const DiscriminationProblem& problem, const NuisanceVector& q, double x) {
  return eta_bar(problem, q, x);
}

SquaredResidualPeak max_squared_residual(const TrigPolynomial& residual, int grid_size,
                                         std::span<const double> seeds) {
  if (grid_size < 3) throw InvalidArgument("grid size must be at least 3");
  const double step = kTwoPi / grid_size;
  std::vector<double> v(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    const double r = residual(i * step);
    v[i] = r * r;
  }

  double grid_best = *std::max_element(v.begin(), v.end());
  for (double s : seeds) {
    const double r = residual(s);
    grid_best = std::max(grid_best, r * r);
  }
  const double band = grid_best * (1.0 - kRefineBand);

  SquaredResidualPeak best{0.0, -1.0};
  auto consider = [&](const SquaredResidualPeak& c) {
    // lowest location wins ties, for deterministic output
    if (c.value > best.value || (c.value == best.value && c.x < best.x)) best = c;
  };
  for (int i = 0; i < grid_size; ++i) {
    const double left = v[(i + grid_size - 1) % grid_size];
    const double right = v[(i + 1) % grid_size];
    if (v[i] >= left && v[i] >= right && v[i] >= band) {
      consider({i * step, v[i]});
      consider(refine_peak(residual, i * step, step));
    }
  }
  for (double s : seeds) {
    const double r = residual(s);
    if (r * r >= band) {
      consider({reduce_angle(s), r * r});
      consider(refine_peak(residual, s, step));
    }
  }
  return best;
}

int certificate_grid_size(int m) { return std::max(4096, 512 * m); }

NuisanceVector certificate_minimizer(const DiscriminationProblem& problem, const Design& design) {
  const InnerSolution inner =
      solve_inner(problem, design.points(), design.weights(), kGramEigenCutoff);
  const TResult& tr = inner.result;
  if (tr.t_value <= kAnnihilationThreshold) {
    throw InvalidArgument("design annihilates the difference; certificate undefined");
  }
  const int grid = certificate_grid_size(problem.m());
  const NuisanceVector q = stationary_minimizer(problem, design, inner);
  if (inner.null_basis.cols() == 0) return q;
  const SquaredResidualPeak peak =
      max_squared_residual(TrigPolynomial::difference(problem, q), grid, design.points());
  if (peak.value <= tr.t_value * (1.0 + kMinimaxTrigger)) return q;
  return minimax_minimizer(problem, design, inner.null_basis, q, grid);
}

CertificateReport certify(const DiscriminationProblem& problem, const Design& design,
                          double tol_rel) {
  const NuisanceVector q = certificate_minimizer(problem, design);
  const TResult tr = t_value(problem, design);
  const TrigPolynomial residual = TrigPolynomial::difference(problem, q);
  const SquaredResidualPeak peak =
      max_squared_residual(residual, certificate_grid_size(problem.m()), design.points());

  CertificateReport rep;
  rep.h = std::sqrt(tr.t_value);
  rep.gap = peak.value - tr.t_value;
  rep.gap_relative = rep.gap / tr.t_value;
  rep.worst_x = peak.x;

  Eigen::VectorXd orth = Eigen::VectorXd::Zero(problem.nuisance_size());
  for (std::size_t i = 0; i < design.size(); ++i) {
    const double x = design.points()[i];
    const double r = residual(x);
    rep.support_dev = std::max(rep.support_dev, std::abs(r * r - tr.t_value));
    orth += design.weights()[i] * r * nuisance_basis(problem, x);
  }
  rep.orth_dev = orth.cwiseAbs().maxCoeff();
  rep.passed = rep.gap_relative <= tol_rel && rep.support_dev / tr.t_value <= tol_rel;
  return rep;
}

double efficiency(const DiscriminationProblem& problem, const Design& design, double t_opt) {
  if (!(t_opt > 0.0)) throw InvalidArgument("optimal criterion value must be positive");
  return std::clamp(t_value(problem, design).t_value / t_opt, 0.0, 1.0 + 1e-9);
}

}  // namespace toptdes
