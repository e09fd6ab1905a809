#include "toptdes/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "toptdes/criterion.hpp"
#include "toptdes/error.hpp"

namespace toptdes {

namespace {

// Slack on the arccos argument, so that b exactly at the threshold is valid.
constexpr double kArccosSlack = 1e-12;

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void require_threshold(int m, double b, const char* name) {
  const double thr = threshold(m);
  if (!(std::abs(b) >= thr * (1.0 - 1e-12))) {
    throw InvalidArgument(std::string("|") + name + "| = " + format_number(std::abs(b)) +
                          " is below validity threshold " + format_number(thr) +
                          " for m = " + std::to_string(m) + "; no closed form, use the solver");
  }
}

Design shifted(const Design& d, double shift) {
  std::vector<double> xs;
  xs.reserve(d.size());
  for (double x : d.points()) xs.push_back(x + shift);
  return make_design(xs, d.weights());
}

// Equioscillating polynomial of the b2 > 0 Chebyshev family,
// (-1)^m b (1+a)^m T_m((-cos x - a)/(1+a)) with a = 1/(2 m b).
double chebyshev_residual(int m, double b, double x) {
  const double a = 1.0 / (2.0 * m * b);
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return sign * b * std::pow(1.0 + a, m) * chebyshev_t(m, (-std::cos(x) - a) / (1.0 + a));
}

}  // namespace

std::string_view to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::THM31: return "THM31";
    case CaseTag::COR32_B1_ZERO: return "COR32_B1_ZERO";
    case CaseTag::COR32_B2_ZERO: return "COR32_B2_ZERO";
    case CaseTag::THM41_POS: return "THM41_POS";
    case CaseTag::THM41_NEG: return "THM41_NEG";
    case CaseTag::THM42_POS: return "THM42_POS";
    case CaseTag::THM42_NEG: return "THM42_NEG";
    case CaseTag::REM34: return "REM34";
  }
  return "UNKNOWN";
}

ClosedFormCase closed_form_case(CaseTag tag, int m) {
  switch (tag) {
    case CaseTag::THM31:
    case CaseTag::COR32_B1_ZERO:
    case CaseTag::COR32_B2_ZERO:
      return {tag, std::nullopt};
    default:
      return {tag, threshold(m)};
  }
}

double threshold(int m) {
  if (m < 2) throw InvalidArgument("threshold requires m >= 2");
  const double c = 1.0 / std::tan(kPi / (2.0 * m));
  return c * c / (2.0 * m);
}

Design design_thm31(int m, double b1, double b2) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (b1 == 0.0) {
    throw InvalidArgument("design_thm31 requires b1 != 0; use design_cor32 for b1 = 0");
  }
  // atan2(1, b) equals arctan(1/b) modulo pi and is continuous through b = 0.
  const double start = std::atan2(1.0, b2 / b1) / m;
  std::vector<double> xs(2 * m);
  for (int i = 0; i < 2 * m; ++i) xs[i] = start + i * kPi / m;
  const std::vector<double> ws(2 * m, 1.0 / (2 * m));
  return make_design(xs, ws);
}

Design design_cor32(int m, ZeroCoefficient zero) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  std::vector<double> xs(2 * m);
  for (int i = 0; i < 2 * m; ++i) {
    xs[i] = (zero == ZeroCoefficient::B1) ? i * kPi / m : (2 * i + 1) * kPi / (2 * m);
  }
  const std::vector<double> ws(2 * m, 1.0 / (2 * m));
  return make_design(xs, ws);
}

ChebyshevNodes support_weights_41(int m, double b) {
  if (m < 2) throw InvalidArgument("support_weights_41 requires m >= 2");
  if (b == 0.0 || !std::isfinite(b)) throw InvalidArgument("support_weights_41 requires b != 0");
  const double a = 1.0 / (2.0 * m * std::abs(b));
  ChebyshevNodes out;
  out.points.resize(m);
  out.weights.resize(m);
  for (int i = 1; i <= m; ++i) {
    double arg = -(1.0 + a) * std::cos((m - i + 1) * kPi / m) - a;
    if (arg < -1.0 - kArccosSlack || arg > 1.0 + kArccosSlack) {
      throw InvalidArgument("|b| = " + format_number(std::abs(b)) +
                            " is below validity threshold " + format_number(threshold(m)) +
                            " for m = " + std::to_string(m));
    }
    arg = std::clamp(arg, -1.0, 1.0);
    out.points[i - 1] = (i == 1) ? 0.0 : std::acos(arg);
    const double c = std::cos((i - 1) * kPi / (2.0 * m));
    out.weights[i - 1] = c * c / m;
  }
  return out;
}

Design design_thm41(int m, double b2) {
  if (m < 2) throw InvalidArgument("design_thm41 requires m >= 2");
  if (b2 == 0.0) throw InvalidArgument("design_thm41 requires b2 != 0");
  require_threshold(m, b2, "b2");
  const ChebyshevNodes half = support_weights_41(m, b2);
  std::vector<double> xs;
  std::vector<double> ws;
  if (b2 > 0.0) {
    for (int i = 0; i < m; ++i) {
      xs.push_back(half.points[i]);
      ws.push_back(half.weights[i]);
    }
    for (int i = m - 1; i >= 1; --i) {
      xs.push_back(kTwoPi - half.points[i]);
      ws.push_back(half.weights[i]);
    }
  } else {
    for (int i = m - 1; i >= 0; --i) {
      xs.push_back(kPi - half.points[i]);
      ws.push_back(half.weights[i]);
    }
    for (int i = 1; i < m; ++i) {
      xs.push_back(kPi + half.points[i]);
      ws.push_back(half.weights[i]);
    }
  }
  return make_design(xs, ws);
}

Design design_thm42(int m, double b1) {
  if (m % 2 == 0) throw InvalidArgument("design_thm42 requires odd m");
  if (b1 == 0.0) throw InvalidArgument("design_thm42 requires b1 != 0");
  require_threshold(m, b1, "b1");
  return shifted(design_thm41(m, b1), kPi / 2.0);
}

Design design_rem34(int m, double b2) {
  if (m % 2 != 0) throw InvalidArgument("design_rem34 requires even m");
  if (b2 == 0.0) throw InvalidArgument("design_rem34 requires b2 != 0");
  require_threshold(m, b2, "b2");
  Design d = shifted(design_thm41(m, b2), 1.5 * kPi);
  if (b2 < 0.0) {
    const auto problem = DiscriminationProblem::three_term_sine(m, 1.0, 0.0, b2);
    const CertificateReport rep = certify(problem, d, 1e-7);
    if (!rep.passed) {
      throw NumericalFailure("shifted design for negative b2 did not certify (gap_relative = " +
                             format_number(rep.gap_relative) + ")");
    }
  }
  return d;
}

double extremal_psi(CaseTag tag, int m, double b, double x) {
  switch (tag) {
    case CaseTag::COR32_B1_ZERO:
      return b * std::cos(m * x);
    case CaseTag::COR32_B2_ZERO:
      return b * std::sin(m * x);
    case CaseTag::THM31:
      throw InvalidArgument("THM31 residual needs both coefficients; use extremal_psi_thm31");
    default:
      break;
  }
  if (m < 2) throw InvalidArgument("Chebyshev families require m >= 2");
  if (b == 0.0) throw InvalidArgument("extremal_psi requires b != 0");
  require_threshold(m, b, "b");
  const double mag = std::abs(b);
  const double neg_parity = (m % 2 == 0) ? -1.0 : 1.0;  // (-1)^(m-1)
  switch (tag) {
    case CaseTag::THM41_POS:
      if (b < 0.0) throw InvalidArgument("THM41_POS requires b2 > 0");
      return chebyshev_residual(m, mag, x);
    case CaseTag::THM41_NEG:
      if (b > 0.0) throw InvalidArgument("THM41_NEG requires b2 < 0");
      return neg_parity * chebyshev_residual(m, mag, x - kPi);
    case CaseTag::THM42_POS:
    case CaseTag::THM42_NEG: {
      if (m % 2 == 0) throw InvalidArgument("THM42 requires odd m");
      if ((tag == CaseTag::THM42_POS) != (b > 0.0)) {
        throw InvalidArgument("THM42 tag does not match the sign of b1");
      }
      const int d = (m + 1) / 2;
      const double sign = (d % 2 == 1) ? 1.0 : -1.0;  // (-1)^(d-1)
      const double shift = (b > 0.0) ? kPi / 2.0 : 1.5 * kPi;
      return sign * chebyshev_residual(m, mag, x - shift);
    }
    case CaseTag::REM34: {
      if (m % 2 != 0) throw InvalidArgument("REM34 requires even m");
      const int d = m / 2;
      const double sign = (d % 2 == 0) ? 1.0 : -1.0;  // (-1)^d
      if (b > 0.0) return sign * chebyshev_residual(m, mag, x - 1.5 * kPi);
      return -sign * chebyshev_residual(m, mag, x - kPi / 2.0);
    }
    default:
      break;
  }
  throw InvalidArgument("unsupported closed-form case");
}

double extremal_psi_thm31(int m, double b1, double b2, double x) {
  return b1 * std::sin(m * x) + b2 * std::cos(m * x);
}

std::optional<ClosedFormSolution> closed_form_for(const DiscriminationProblem& problem) {
  const int m = problem.m();
  const Eigen::VectorXd& b = problem.extra();

  auto two_term = [m](double b1, double b2) -> ClosedFormSolution {
    const double t = b1 * b1 + b2 * b2;
    if (b1 == 0.0) return {CaseTag::COR32_B1_ZERO, design_cor32(m, ZeroCoefficient::B1), t};
    if (b2 == 0.0) return {CaseTag::COR32_B2_ZERO, design_cor32(m, ZeroCoefficient::B2), t};
    return {CaseTag::THM31, design_thm31(m, b1, b2), t};
  };
  auto chebyshev_t_value = [m](double b0, double bb) {
    const double a = 1.0 / (2.0 * m * std::abs(bb));
    return b0 * b0 * bb * bb * std::pow(1.0 + a, 2 * m);
  };

  if (problem.k1() == m - 1 && problem.k2() == m - 1) {
    return two_term(b[0], b[1]);
  }
  if (m >= 2 && problem.k1() == m - 1 && problem.k2() == m - 2) {
    const double b1 = b[0], b0 = b[1], b2 = b[2];
    if (b0 == 0.0) return two_term(b1, b2);
    const double r1 = b1 / b0;
    const double r2 = b2 / b0;
    const double thr = threshold(m);
    if (r1 == 0.0 && std::abs(r2) >= thr) {
      return ClosedFormSolution{r2 > 0.0 ? CaseTag::THM41_POS : CaseTag::THM41_NEG,
                                design_thm41(m, r2), chebyshev_t_value(b0, r2)};
    }
    if (r2 == 0.0 && m % 2 == 1 && std::abs(r1) >= thr) {
      return ClosedFormSolution{r1 > 0.0 ? CaseTag::THM42_POS : CaseTag::THM42_NEG,
                                design_thm42(m, r1), chebyshev_t_value(b0, r1)};
    }
    return std::nullopt;
  }
  if (m >= 2 && problem.k1() == m - 2 && problem.k2() == m - 1) {
    const double b0 = b[0], b1 = b[1], b2 = b[2];
    if (b0 == 0.0) return two_term(b1, b2);
    const double r1 = b1 / b0;
    const double r2 = b2 / b0;
    if (r1 == 0.0 && m % 2 == 0 && std::abs(r2) >= threshold(m)) {
      try {
        return ClosedFormSolution{CaseTag::REM34, design_rem34(m, r2), chebyshev_t_value(b0, r2)};
      } catch (const NumericalFailure&) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace toptdes
