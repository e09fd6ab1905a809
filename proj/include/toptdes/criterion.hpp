#pragma once

#include <span>

#include "toptdes/design.hpp"
#include "toptdes/fourier.hpp"

namespace toptdes {

/// Outcome of the inner least-squares problem defining the T-criterion.
struct TResult {
  double t_value = 0.0;
  NuisanceVector q_hat;
  int gram_rank = 0;
};

/// Equivalence-theorem check of a design.
struct CertificateReport {
  double h = 0.0;             ///< sqrt(T), the equioscillation amplitude
  double gap = 0.0;           ///< max_x psi^2(x) - T
  double gap_relative = 0.0;  ///< gap / T
  double worst_x = 0.0;       ///< location of max psi^2
  double support_dev = 0.0;   ///< max_i |psi^2(x_i) - T|
  double orth_dev = 0.0;      ///< max_j |sum_i w_i psi(x_i) f_j(x_i)|
  bool passed = false;
};

inline constexpr double kDefaultCertificateTolerance = 1e-6;

/// Designs with T at or below this carry no information about the difference.
inline constexpr double kAnnihilationThreshold = 1e-14;

/// Eigenvalues of the weighted Gram matrix below this fraction of the largest
/// one are treated as zero; q_hat is then the minimum-norm minimizer.
inline constexpr double kGramEigenCutoff = 1e-12;

/// T(xi) = min_q sum_i w_i eta_bar(x_i, q)^2.
TResult t_value(const DiscriminationProblem& problem, const Design& design);

/// Same for a raw (points, weights) pair; weights need not be normalized.
/// `eigen_cutoff` is the relative eigenvalue threshold of the pseudo-inverse.
TResult t_value(const DiscriminationProblem& problem, std::span<const double> points,
                std::span<const double> weights, double eigen_cutoff = kGramEigenCutoff);

/// The residual function psi(x) = eta_bar(x, q, extra).
double psi(const DiscriminationProblem& problem, const NuisanceVector& q, double x);

struct SquaredResidualPeak {
  double x = 0.0;
  double value = 0.0;  ///< psi^2(x)
};

/// Global maximum of psi^2 over the circle: a uniform grid of `grid_size`
/// points plus the extra `seeds`, followed by Newton refinement on the
/// derivative of psi^2 at every candidate whose value is close to the best.
SquaredResidualPeak max_squared_residual(const TrigPolynomial& residual, int grid_size,
                                         std::span<const double> seeds = {});

/// Grid size used by `certify`: max(4096, 512 m).
int certificate_grid_size(int m);

/// Inner minimizer whose residual `certify` checks. Equals q_hat for a
/// nonsingular Gram matrix; otherwise the minimizer with the lowest peak of
/// psi^2, which is what optimality requires. Throws like `certify`.
NuisanceVector certificate_minimizer(const DiscriminationProblem& problem, const Design& design);

/// Throws InvalidArgument when T(xi) <= kAnnihilationThreshold.
CertificateReport certify(const DiscriminationProblem& problem, const Design& design,
                          double tol_rel = kDefaultCertificateTolerance);

/// T(xi) / t_opt clamped to [0, 1 + 1e-9]. Throws InvalidArgument if t_opt <= 0.
double efficiency(const DiscriminationProblem& problem, const Design& design, double t_opt);

}  // namespace toptdes
