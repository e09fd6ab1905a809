#pragma once

#include <vector>

#include "toptdes/design.hpp"
#include "toptdes/solver.hpp"

namespace toptdes {

/// D-optimal design of the extended m = 3 model: equal weights on k pi/4.
Design d_optimal_design();

/// D3-optimal design (most precise estimation of b0, b1, b2 for m = 3):
/// the same eight points with weights 3/20 on even k and 1/10 on odd k.
Design d3_optimal_design();

/// Equal weights on 2m+2 equally spaced points starting at 0.
Design uniform_design(int m);

struct EfficiencyRow {
  double b1 = 0.0;
  double b2 = 0.0;
  double eff_d = 0.0;
  double eff_d3 = 0.0;
  double t_opt = 0.0;
  bool resolved = false;
};

struct EfficiencyTable {
  std::vector<EfficiencyRow> rows;  ///< b2-major order
};

/// T-efficiencies of the D- and D3-optimal designs for three_term(3, 1, b1, b2).
/// The optimal value comes from the closed form when one applies, otherwise
/// from the certified solver.
EfficiencyTable efficiency_curves(const std::vector<double>& b2_values, const Range& b1,
                                  const SolverOptions& opts = {}, int jobs = 1);

/// max_xi T(xi) for `problem`: closed form when available, else solve().
double optimal_t_value(const DiscriminationProblem& problem, const SolverOptions& opts = {});

}  // namespace toptdes
