#include "toptdes/fourier.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "toptdes/error.hpp"

namespace toptdes {

DiscriminationProblem::DiscriminationProblem(int m, int k1, int k2, Eigen::VectorXd extra)
    : m_(m), k1_(k1), k2_(k2), extra_(std::move(extra)) {
  if (m < 1) {
    throw InvalidArgument("degree m must be at least 1, got " + std::to_string(m));
  }
  if (k1 < 0 || k1 > m - 1 || k2 < 0 || k2 > m - 1) {
    throw InvalidArgument("nuisance orders must satisfy 0 <= k1, k2 <= m-1 (m=" +
                          std::to_string(m) + ", k1=" + std::to_string(k1) +
                          ", k2=" + std::to_string(k2) + ")");
  }
  if (extra_.size() != extra_size()) {
    throw InvalidArgument("extra coefficient vector has length " + std::to_string(extra_.size()) +
                          ", expected 2m-k1-k2 = " + std::to_string(extra_size()));
  }
  if (!extra_.allFinite()) {
    throw InvalidArgument("extra coefficients must be finite");
  }
  if (extra_.isZero(0.0)) {
    throw InvalidArgument("extra coefficients are all zero: the two models coincide");
  }
}

DiscriminationProblem DiscriminationProblem::three_term(int m, double b0, double b1, double b2) {
  if (m < 2) throw InvalidArgument("three-term family requires m >= 2");
  // sines: sin(mx); cosines: cos((m-1)x), cos(mx)
  return {m, m - 1, m - 2, Eigen::Vector3d(b1, b0, b2)};
}

DiscriminationProblem DiscriminationProblem::three_term_sine(int m, double b0, double b1, double b2) {
  if (m < 2) throw InvalidArgument("three-term sine family requires m >= 2");
  // sines: sin((m-1)x), sin(mx); cosines: cos(mx)
  return {m, m - 2, m - 1, Eigen::Vector3d(b0, b1, b2)};
}

DiscriminationProblem DiscriminationProblem::two_term(int m, double b1, double b2) {
  return {m, m - 1, m - 1, Eigen::Vector2d(b1, b2)};
}

DiscriminationProblem DiscriminationProblem::scaled(double factor) const {
  return {m_, k1_, k2_, extra_ * factor};
}

Eigen::VectorXd nuisance_basis(const DiscriminationProblem& problem, double x) {
  const int k1 = problem.k1();
  const int k2 = problem.k2();
  Eigen::VectorXd f(problem.nuisance_size());
  f[0] = 1.0;
  for (int i = 1; i <= k1; ++i) f[i] = std::sin(i * x);
  for (int i = 1; i <= k2; ++i) f[k1 + i] = std::cos(i * x);
  return f;
}

Eigen::VectorXd nuisance_basis_derivative(const DiscriminationProblem& problem, double x) {
  const int k1 = problem.k1();
  const int k2 = problem.k2();
  Eigen::VectorXd f(problem.nuisance_size());
  f[0] = 0.0;
  for (int i = 1; i <= k1; ++i) f[i] = i * std::cos(i * x);
  for (int i = 1; i <= k2; ++i) f[k1 + i] = -i * std::sin(i * x);
  return f;
}

Eigen::VectorXd extra_basis(const DiscriminationProblem& problem, double x) {
  const int m = problem.m();
  const int n_sin = m - problem.k1();
  Eigen::VectorXd g(problem.extra_size());
  for (int i = problem.k1() + 1; i <= m; ++i) g[i - problem.k1() - 1] = std::sin(i * x);
  for (int i = problem.k2() + 1; i <= m; ++i) g[n_sin + i - problem.k2() - 1] = std::cos(i * x);
  return g;
}

double eta_bar(const DiscriminationProblem& problem, const NuisanceVector& q, double x) {
  if (q.size() != problem.nuisance_size()) {
    throw InvalidArgument("nuisance vector has length " + std::to_string(q.size()) +
                          ", expected 1+k1+k2 = " + std::to_string(problem.nuisance_size()));
  }
  return nuisance_basis(problem, x).dot(q) + extra_basis(problem, x).dot(problem.extra());
}

double chebyshev_t(int n, double t) {
  if (n < 0) throw InvalidArgument("Chebyshev degree must be non-negative");
  if (n == 0) return 1.0;
  if (std::abs(t) <= 1.0) return std::cos(n * std::acos(t));
  double prev = 1.0;
  double cur = t;
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * t * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

TrigPolynomial::TrigPolynomial(double constant, std::vector<double> cos_coeffs,
                               std::vector<double> sin_coeffs)
    : constant_(constant), cos_(std::move(cos_coeffs)), sin_(std::move(sin_coeffs)) {
  if (cos_.size() != sin_.size()) {
    throw InvalidArgument("TrigPolynomial: cosine and sine coefficient lists differ in length");
  }
}

TrigPolynomial TrigPolynomial::difference(const DiscriminationProblem& problem,
                                          const NuisanceVector& q) {
  if (q.size() != problem.nuisance_size()) {
    throw InvalidArgument("nuisance vector has length " + std::to_string(q.size()) +
                          ", expected 1+k1+k2 = " + std::to_string(problem.nuisance_size()));
  }
  const int m = problem.m();
  const int k1 = problem.k1();
  const int k2 = problem.k2();
  const int n_sin = m - k1;
  std::vector<double> c(m, 0.0);
  std::vector<double> s(m, 0.0);
  for (int i = 1; i <= k1; ++i) s[i - 1] += q[i];
  for (int i = 1; i <= k2; ++i) c[i - 1] += q[k1 + i];
  const Eigen::VectorXd& b = problem.extra();
  for (int i = k1 + 1; i <= m; ++i) s[i - 1] += b[i - k1 - 1];
  for (int i = k2 + 1; i <= m; ++i) c[i - 1] += b[n_sin + i - k2 - 1];
  return {q[0], std::move(c), std::move(s)};
}

double TrigPolynomial::operator()(double x) const {
  const double c1 = std::cos(x);
  const double s1 = std::sin(x);
  double ci = 1.0;
  double si = 0.0;
  double sum = constant_;
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    const double cn = ci * c1 - si * s1;
    si = si * c1 + ci * s1;
    ci = cn;
    sum += cos_[i] * ci + sin_[i] * si;
  }
  return sum;
}

TrigPolynomial::Jet TrigPolynomial::jet(double x) const {
  const double c1 = std::cos(x);
  const double s1 = std::sin(x);
  double ci = 1.0;
  double si = 0.0;
  Jet out{constant_, 0.0, 0.0};
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    const double cn = ci * c1 - si * s1;
    si = si * c1 + ci * s1;
    ci = cn;
    const double k = static_cast<double>(i + 1);
    const double even = cos_[i] * ci + sin_[i] * si;
    out.value += even;
    out.d1 += k * (sin_[i] * ci - cos_[i] * si);
    out.d2 -= k * k * even;
  }
  return out;
}

}  // namespace toptdes
