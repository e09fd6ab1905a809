#include "toptdes/reference.hpp"

#include "toptdes/closed_form.hpp"
#include "toptdes/criterion.hpp"
#include "toptdes/error.hpp"
#include "toptdes/parallel.hpp"

namespace toptdes {

namespace {

std::vector<double> octants() {
  std::vector<double> xs(8);
  for (int k = 0; k < 8; ++k) xs[k] = k * kPi / 4.0;
  return xs;
}

}  // namespace

Design d_optimal_design() {
  const std::vector<double> ws(8, 1.0 / 8.0);
  return make_design(octants(), ws);
}

Design d3_optimal_design() {
  const std::vector<double> ws{3.0 / 20, 1.0 / 10, 3.0 / 20, 1.0 / 10,
                               3.0 / 20, 1.0 / 10, 3.0 / 20, 1.0 / 10};
  return make_design(octants(), ws);
}

Design uniform_design(int m) {
  if (m < 1) throw InvalidArgument("uniform_design requires m >= 1");
  const int n = 2 * m + 2;
  std::vector<double> xs(n);
  for (int k = 0; k < n; ++k) xs[k] = k * kTwoPi / n;
  const std::vector<double> ws(n, 1.0 / n);
  return make_design(xs, ws);
}

double optimal_t_value(const DiscriminationProblem& problem, const SolverOptions& opts) {
  if (const auto cf = closed_form_for(problem)) return t_value(problem, cf->design).t_value;
  return solve(problem, opts).t_value;
}

EfficiencyTable efficiency_curves(const std::vector<double>& b2_values, const Range& b1,
                                  const SolverOptions& opts, int jobs) {
  EfficiencyTable table;
  table.rows.resize(b2_values.size() * b1.count);
  const Design d_design = d_optimal_design();
  const Design d3_design = d3_optimal_design();
  parallel_for(table.rows.size(), jobs, [&](std::size_t idx) {
    EfficiencyRow& row = table.rows[idx];
    row.b2 = b2_values[idx / b1.count];
    row.b1 = b1.at(static_cast<int>(idx % b1.count));
    const auto problem = DiscriminationProblem::three_term(3, 1.0, row.b1, row.b2);
    try {
      row.t_opt = optimal_t_value(problem, opts);
      row.eff_d = efficiency(problem, d_design, row.t_opt);
      row.eff_d3 = efficiency(problem, d3_design, row.t_opt);
      row.resolved = true;
    } catch (const SolveFailure&) {
      row.resolved = false;
    }
  });
  return table;
}

}  // namespace toptdes
