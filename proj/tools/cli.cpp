#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "toptdes/closed_form.hpp"
#include "toptdes/criterion.hpp"
#include "toptdes/error.hpp"
#include "toptdes/reference.hpp"
#include "toptdes/serialization.hpp"
#include "toptdes/solver.hpp"

namespace toptdes::cli {

namespace {

struct ProblemArgs {
  int m = 0;
  int k1 = -1;
  int k2 = -1;
  std::vector<double> b;
};

struct Common {
  std::string out_path;
  std::string format = "csv";
  int jobs = 1;
  SolverOptions solver;
};

void add_solver_options(CLI::App* sub, Common& c) {
  sub->add_option("--max-iters", c.solver.max_outer_iters, "outer iterations per restart");
  sub->add_option("--grid", c.solver.grid_size, "grid size for the psi^2 search (0: 512 m)");
  sub->add_option("--cluster-delta", c.solver.cluster_delta, "merge tolerance in radians");
  sub->add_option("--stop-gap", c.solver.stop_gap_rel, "relative gap for certification");
  sub->add_option("--polish-iters", c.solver.polish_iters, "polish sweeps per phase");
  sub->add_option("--restarts", c.solver.restarts, "number of restarts");
  sub->add_option("--seed", c.solver.seed, "random seed (default 0)");
}

void add_problem_options(CLI::App* sub, ProblemArgs& p) {
  sub->add_option("--m", p.m, "degree of the extended model")->required();
  sub->add_option("--k1", p.k1, "sine degree of the smaller model")->required();
  sub->add_option("--k2", p.k2, "cosine degree of the smaller model")->required();
  sub->add_option("--b", p.b, "extra coefficients, sines then cosines")
      ->delimiter(',')
      ->required();
}

DiscriminationProblem make_problem(const ProblemArgs& p) {
  return DiscriminationProblem(p.m, p.k1, p.k2,
                               Eigen::Map<const Eigen::VectorXd>(
                                   p.b.data(), static_cast<Eigen::Index>(p.b.size())));
}

int resolve_jobs(int flag) {
  int jobs = flag;
  if (const char* env = std::getenv("TOPTDES_JOBS"); env && *env) {
    std::istringstream in(env);
    if (!(in >> jobs) || !in.eof()) {
      throw InvalidArgument(std::string("TOPTDES_JOBS is not an integer: ") + env);
    }
  }
  if (jobs < 1) throw InvalidArgument("jobs must be at least 1");
  return jobs;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Accepts a bare design or any object carrying one under "design".
Design load_design(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
  if (j.is_object() && j.contains("design")) return design_from_json(j.at("design"));
  return design_from_json(j);
}

nlohmann::json table_json(const RegionTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : t.cells) {
    rows.push_back({{"b1", c.b1}, {"b2", c.b2}, {"n_support", c.n_support},
                    {"t_value", c.t_value}, {"gap_rel", c.gap_rel},
                    {"status", c.resolved ? "OK" : "UNRESOLVED"}});
  }
  return rows;
}

nlohmann::json table_json(const TrajectoryTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points) {
      pts.push_back({{"point_index", p.track}, {"x", p.x}, {"weight", p.weight}});
    }
    rows.push_back({{"b1", r.b1}, {"resolved", r.resolved}, {"points", pts}});
  }
  return rows;
}

nlohmann::json table_json(const EfficiencyTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row = {{"b1", r.b1}, {"b2", r.b2}, {"resolved", r.resolved}};
    if (r.resolved) {
      row["eff_D"] = r.eff_d;
      row["eff_D3"] = r.eff_d3;
      row["t_opt"] = r.t_opt;
    }
    rows.push_back(row);
  }
  return rows;
}

template <typename Table>
void emit_table(std::ostream& out, const Table& table, const std::string& format) {
  if (format == "json") {
    out << table_json(table).dump(2) << '\n';
  } else {
    write_csv(out, table);
  }
}

struct AnalyticArgs {
  std::string thm;
  int m = 0;
  std::optional<double> b1;
  std::optional<double> b2;
};

std::pair<DiscriminationProblem, Design> analytic_design(const AnalyticArgs& a) {
  auto need = [&](const std::optional<double>& v, const char* name) {
    if (!v) throw InvalidArgument("--thm " + a.thm + " requires " + name);
    return *v;
  };
  if (a.thm == "3.1") {
    const double b1 = need(a.b1, "--b1");
    const double b2 = need(a.b2, "--b2");
    return {DiscriminationProblem::two_term(a.m, b1, b2), design_thm31(a.m, b1, b2)};
  }
  if (a.thm == "3.2") {
    const double b1 = a.b1.value_or(0.0);
    const double b2 = a.b2.value_or(0.0);
    if ((b1 == 0.0) == (b2 == 0.0)) {
      throw InvalidArgument("--thm 3.2 requires exactly one of --b1, --b2 to be nonzero");
    }
    const ZeroCoefficient zero = (b1 == 0.0) ? ZeroCoefficient::B1 : ZeroCoefficient::B2;
    return {DiscriminationProblem::two_term(a.m, b1, b2), design_cor32(a.m, zero)};
  }
  if (a.thm == "4.1") {
    const double b2 = need(a.b2, "--b2");
    return {DiscriminationProblem::three_term(a.m, 1.0, 0.0, b2), design_thm41(a.m, b2)};
  }
  if (a.thm == "4.2") {
    const double b1 = need(a.b1, "--b1");
    return {DiscriminationProblem::three_term(a.m, 1.0, b1, 0.0), design_thm42(a.m, b1)};
  }
  if (a.thm == "3.4") {
    const double b2 = need(a.b2, "--b2");
    return {DiscriminationProblem::three_term_sine(a.m, 1.0, 0.0, b2), design_rem34(a.m, b2)};
  }
  throw InvalidArgument("unknown --thm " + a.thm + " (expected 3.1, 3.2, 3.4, 4.1 or 4.2)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"T-optimal discriminating designs for Fourier regression models", "toptdes"};
  app.require_subcommand(1);

  Common common;
  ProblemArgs prob;
  AnalyticArgs analytic;
  std::string design_path;
  double tol = kDefaultCertificateTolerance;
  std::string region_case;
  std::string b1_range;
  std::string b2_range;
  double floor = kRegionWeightFloor;
  int trace_m = 3;
  double trace_b2 = 1.0;
  std::vector<double> b2_list;

  auto add_io = [&](CLI::App* sub, bool tables) {
    sub->add_option("--out", common.out_path, "write data to this file instead of stdout");
    if (tables) {
      sub->add_option("--format", common.format, "csv or json")
          ->check(CLI::IsMember({"csv", "json"}));
      sub->add_option("--jobs", common.jobs, "worker threads (TOPTDES_JOBS overrides)");
    }
  };

  CLI::App* a_cmd = app.add_subcommand("analytic", "closed-form design and its certificate");
  a_cmd->add_option("--thm", analytic.thm, "3.1, 3.2, 3.4, 4.1 or 4.2")->required();
  a_cmd->add_option("--m", analytic.m, "degree")->required();
  a_cmd->add_option("--b1", analytic.b1, "coefficient of sin(mx)");
  a_cmd->add_option("--b2", analytic.b2, "coefficient of cos(mx)");
  add_io(a_cmd, false);

  CLI::App* s_cmd = app.add_subcommand("solve", "numerically optimal certified design");
  add_problem_options(s_cmd, prob);
  add_solver_options(s_cmd, common);
  add_io(s_cmd, false);

  CLI::App* c_cmd = app.add_subcommand("check", "equivalence-theorem certificate of a design");
  c_cmd->add_option("--design", design_path, "design JSON file")->required();
  add_problem_options(c_cmd, prob);
  c_cmd->add_option("--tol", tol, "relative gap tolerance");
  add_io(c_cmd, false);

  CLI::App* r_cmd = app.add_subcommand("scan-regions", "support size over a (b1, b2) grid");
  r_cmd->add_option("--case", region_case, "m2 or m3")
      ->required()
      ->check(CLI::IsMember({"m2", "m3"}));
  r_cmd->add_option("--b1", b1_range, "lo:hi:n")->required();
  r_cmd->add_option("--b2", b2_range, "lo:hi:n")->required();
  r_cmd->add_option("--floor", floor, "weights at or below this are not counted");
  add_solver_options(r_cmd, common);
  add_io(r_cmd, true);

  CLI::App* t_cmd = app.add_subcommand("trace", "support point trajectories along b1");
  t_cmd->add_option("--m", trace_m, "degree (three-term family, b0 = 1)")->required();
  t_cmd->add_option("--b2", trace_b2, "fixed b2")->required();
  t_cmd->add_option("--b1", b1_range, "lo:hi:n")->required();
  t_cmd->add_option("--floor", floor, "weights at or below this are dropped");
  add_solver_options(t_cmd, common);
  add_io(t_cmd, true);

  CLI::App* e_cmd = app.add_subcommand("efficiency", "T-efficiency of the D- and D3-optimal designs");
  e_cmd->add_option("--b2", b2_list, "comma list of b2 values")->delimiter(',')->required();
  e_cmd->add_option("--b1", b1_range, "lo:hi:n")->required();
  add_solver_options(e_cmd, common);
  add_io(e_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    std::ofstream file;
    if (!common.out_path.empty()) {
      file.open(common.out_path);
      if (!file) throw InvalidArgument("cannot write " + common.out_path);
    }
    std::ostream& data = common.out_path.empty() ? out : file;
    common.solver.validate();

    if (a_cmd->parsed()) {
      const auto [problem, design] = analytic_design(analytic);
      const CertificateReport rep = certify(problem, design);
      nlohmann::json j = {{"thm", analytic.thm},
                          {"design", to_json(design)},
                          {"t_value", t_value(problem, design).t_value},
                          {"certificate", to_json(rep)}};
      data << j.dump(2) << '\n';
      return rep.passed ? kExitOk : kExitNumerical;
    }

    if (s_cmd->parsed()) {
      const DiscriminationProblem problem = make_problem(prob);
      try {
        data << to_json(solve(problem, common.solver)).dump(2) << '\n';
      } catch (const SolveFailure& f) {
        err << "error: " << f.what() << '\n';
        nlohmann::json j = {{"certified", false},
                            {"best_design", to_json(f.best_design())},
                            {"gap_relative", f.gap_relative()}};
        err << j.dump() << '\n';
        return kExitNumerical;
      }
      return kExitOk;
    }

    if (c_cmd->parsed()) {
      const DiscriminationProblem problem = make_problem(prob);
      const Design design = load_design(design_path);
      if (!(tol > 0.0)) throw InvalidArgument("--tol must be positive");
      const CertificateReport rep = certify(problem, design, tol);
      nlohmann::json j = to_json(rep);
      j["t_value"] = t_value(problem, design).t_value;
      data << j.dump(2) << '\n';
      return rep.passed ? kExitOk : kExitNumerical;
    }

    const int jobs = resolve_jobs(common.jobs);

    if (r_cmd->parsed()) {
      const RegionCase rc = (region_case == "m2") ? RegionCase::M2 : RegionCase::M3;
      const RegionTable table = scan_regions(rc, Range::parse(b1_range), Range::parse(b2_range),
                                             common.solver, jobs, floor);
      emit_table(data, table, common.format);
      for (const auto& c : table.cells) {
        if (!c.resolved) {
          err << "warning: unresolved cells present\n";
          return kExitNumerical;
        }
      }
      return kExitOk;
    }

    if (t_cmd->parsed()) {
      const TrajectoryTable table =
          trace_designs(trace_m, trace_b2, Range::parse(b1_range), common.solver, jobs, floor);
      emit_table(data, table, common.format);
      for (const auto& r : table.rows) {
        if (!r.resolved) {
          err << "warning: unresolved rows present\n";
          return kExitNumerical;
        }
      }
      return kExitOk;
    }

    if (e_cmd->parsed()) {
      const EfficiencyTable table =
          efficiency_curves(b2_list, Range::parse(b1_range), common.solver, jobs);
      emit_table(data, table, common.format);
      for (const auto& r : table.rows) {
        if (!r.resolved) {
          err << "warning: unresolved rows present\n";
          return kExitNumerical;
        }
      }
      return kExitOk;
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitInvalid;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"toptdes"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace toptdes::cli
