#pragma once

#include <numbers>
#include <vector>

#include <Eigen/Core>

namespace toptdes {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Coefficients q of the nuisance part of the difference function, ordered as
/// (q0; sine coefficients for frequencies 1..k1; cosine coefficients for
/// frequencies 1..k2).
using NuisanceVector = Eigen::VectorXd;

/// A pair of nested Fourier regression models, represented through the
/// difference of their regression functions.
///
/// The smaller model spans {1, sin(x)..sin(k1 x), cos(x)..cos(k2 x)}. The
/// extended model adds sin(i x) for i = k1+1..m and cos(i x) for i = k2+1..m
/// with fixed coefficients `extra` (sines first, then cosines, each ascending
/// in frequency).
class DiscriminationProblem {
 public:
  /// Throws InvalidArgument unless 0 <= k1, k2 <= m-1, extra has length
  /// 2m-k1-k2 and extra is not identically zero.
  DiscriminationProblem(int m, int k1, int k2, Eigen::VectorXd extra);

  /// Case k1 = m-1, k2 = m-2 with
  /// eta = ... + b0 cos((m-1)x) + b1 sin(mx) + b2 cos(mx).
  static DiscriminationProblem three_term(int m, double b0, double b1, double b2);

  /// Case k1 = m-2, k2 = m-1 with
  /// eta = ... + b0 sin((m-1)x) + b1 sin(mx) + b2 cos(mx).
  static DiscriminationProblem three_term_sine(int m, double b0, double b1, double b2);

  /// Case k1 = k2 = m-1 with eta = ... + b1 sin(mx) + b2 cos(mx).
  static DiscriminationProblem two_term(int m, double b1, double b2);

  int m() const { return m_; }
  int k1() const { return k1_; }
  int k2() const { return k2_; }
  const Eigen::VectorXd& extra() const { return extra_; }

  int nuisance_size() const { return 1 + k1_ + k2_; }
  int extra_size() const { return 2 * m_ - k1_ - k2_; }

  /// Same model pair with the extra coefficients multiplied by `factor` (!= 0).
  DiscriminationProblem scaled(double factor) const;

 private:
  int m_;
  int k1_;
  int k2_;
  Eigen::VectorXd extra_;
};

/// (1, sin x, ..., sin k1 x, cos x, ..., cos k2 x).
Eigen::VectorXd nuisance_basis(const DiscriminationProblem& problem, double x);

/// Derivative of nuisance_basis with respect to x.
Eigen::VectorXd nuisance_basis_derivative(const DiscriminationProblem& problem, double x);

/// (sin((k1+1)x), ..., sin(mx), cos((k2+1)x), ..., cos(mx)).
Eigen::VectorXd extra_basis(const DiscriminationProblem& problem, double x);

/// Difference function: nuisance_basis(x).q + extra_basis(x).extra.
double eta_bar(const DiscriminationProblem& problem, const NuisanceVector& q, double x);

/// Chebyshev polynomial of the first kind. Uses cos(n arccos t) on [-1, 1] and
/// the three-term recurrence outside.
double chebyshev_t(int n, double t);

/// Real trigonometric polynomial c0 + sum_i (a_i cos(i x) + b_i sin(i x)).
/// Holds the difference function for fixed q so that it and its derivatives
/// can be evaluated cheaply on dense grids.
class TrigPolynomial {
 public:
  struct Jet {
    double value;
    double d1;
    double d2;
  };

  TrigPolynomial(double constant, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs);

  /// The difference function eta_bar(., q, extra) of `problem`.
  static TrigPolynomial difference(const DiscriminationProblem& problem, const NuisanceVector& q);

  int degree() const { return static_cast<int>(cos_.size()); }
  double constant() const { return constant_; }
  /// Coefficient of cos(i x), i >= 1.
  double cos_coeff(int i) const { return cos_[i - 1]; }
  /// Coefficient of sin(i x), i >= 1.
  double sin_coeff(int i) const { return sin_[i - 1]; }

  double operator()(double x) const;
  Jet jet(double x) const;

 private:
  double constant_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

}  // namespace toptdes
