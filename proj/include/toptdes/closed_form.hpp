#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "toptdes/design.hpp"
#include "toptdes/fourier.hpp"

namespace toptdes {

/// Families with an explicit T-optimal design.
///
///  THM31          k1 = k2 = m-1, both b1, b2 nonzero: 2m equally spaced points.
///  COR32_B1_ZERO  k1 = k2 = m-1, b1 = 0.
///  COR32_B2_ZERO  k1 = k2 = m-1, b2 = 0.
///  THM41_POS/NEG  k1 = m-1, k2 = m-2, b0 = 1, b1 = 0, +-b2 above threshold.
///  THM42_POS/NEG  same family with b2 = 0, odd m, +-b1 above threshold.
///  REM34          k1 = m-2, k2 = m-1, even m, b0 = 1, b1 = 0, |b2| above threshold.
enum class CaseTag {
  THM31,
  COR32_B1_ZERO,
  COR32_B2_ZERO,
  THM41_POS,
  THM41_NEG,
  THM42_POS,
  THM42_NEG,
  REM34,
};

std::string_view to_string(CaseTag tag);

struct ClosedFormCase {
  CaseTag tag;
  std::optional<double> threshold;  ///< validity bound on |b|, when one applies
};

/// Builds the case descriptor; the threshold is set for the Chebyshev families.
ClosedFormCase closed_form_case(CaseTag tag, int m);

/// (1/(2m)) cot^2(pi/(2m)), m >= 2.
double threshold(int m);

/// Equally weighted design on x_i = arctan(1/b)/m + (i-1)pi/m, i = 1..2m,
/// with b = b2/b1. Throws InvalidArgument when b1 == 0.
Design design_thm31(int m, double b1, double b2);

enum class ZeroCoefficient { B1, B2 };

/// Equally weighted 2m-point designs for b1 = 0 (points i pi/m) and
/// b2 = 0 (points (2i-1) pi/(2m)).
Design design_cor32(int m, ZeroCoefficient zero);

struct ChebyshevNodes {
  std::vector<double> points;   ///< x*_1 = 0 < x*_2 < ... < x*_m <= pi
  std::vector<double> weights;  ///< w*_i = cos^2((i-1)pi/(2m)) / m
};

/// Half-design built from the extremal points of the shifted Chebyshev
/// polynomial. Throws InvalidArgument below threshold(m).
ChebyshevNodes support_weights_41(int m, double b);

/// 2m-1 point design for k1 = m-1, k2 = m-2, b0 = 1, b1 = 0.
Design design_thm41(int m, double b2);

/// design_thm41 at |b1| shifted by pi/2; for odd m, b0 = 1, b2 = 0.
Design design_thm42(int m, double b1);

/// design_thm41 at b2 shifted by 3pi/2; for even m, k1 = m-2, k2 = m-1,
/// b0 = 1, b1 = 0. The b2 < 0 branch is only returned after it certifies.
Design design_rem34(int m, double b2);

/// The equioscillating residual of the closed-form design of `tag`, built
/// from the Chebyshev polynomial T_m. `b` is the single free coefficient
/// (b2 for THM41 and REM34, b1 for THM42, the nonzero one for COR32); b0 = 1.
/// Throws InvalidArgument if (tag, m, b) is outside the family.
double extremal_psi(CaseTag tag, int m, double b, double x);

/// b1 sin(mx) + b2 cos(mx): the residual of design_thm31.
double extremal_psi_thm31(int m, double b1, double b2, double x);

/// The closed-form design of `problem`, if the problem lies in one of the
/// explicit families (after dividing by b0 where applicable).
struct ClosedFormSolution {
  CaseTag tag;
  Design design;
  double t_value;  ///< squared equioscillation amplitude
};
std::optional<ClosedFormSolution> closed_form_for(const DiscriminationProblem& problem);

}  // namespace toptdes
