#include "ridemix/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ridemix/dynamics.hpp"
#include "ridemix/json_io.hpp"
#include "ridemix/model.hpp"
#include "ridemix/solver.hpp"
#include "ridemix/star.hpp"

namespace ridemix {
namespace {

// All numeric CLI output goes through this: 12 significant digits.
std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct GlobalOpts {
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  int max_iter = 200000;
  unsigned seed = 0;  // reserved for randomized scenario generation only
};

SolverOptions make_options(const GlobalOpts& g) {
  SolverOptions o;
  o.qp.eps_primal = g.tol_primal;
  o.qp.eps_dual = g.tol_dual;
  o.qp.max_iter = g.max_iter;
  return o;
}

void warn_if_degenerate(const EconomicParams& params, std::ostream& err) {
  if (params.degenerate()) {
    err << "warning: degenerate economics (both vehicle types cost more than "
           "any rider pays); the optimum is the empty market\n";
  }
}

// ---------------------------------------------------------------------------
// verify helpers
// ---------------------------------------------------------------------------

struct LabeledResidual {
  double value = 0.0;
  std::string label;
};

// Same arithmetic as equilibrium_residual, but remembers which equation
// family and location is worst so failures can be named.
LabeledResidual labeled_equilibrium_residual(const RecoveredFlows& flows,
                                             const DemandPattern& pattern,
                                             const EconomicParams& params,
                                             Assignment assignment) {
  const int n = pattern.n();
  const Mat& a = pattern.alpha();
  const double beta = params.beta();
  Vec u, v;
  serve_split(assignment, flows.d, flows.x, flows.z, u, v);
  LabeledResidual worst;
  auto consider = [&](double value, const char* family, int i) {
    if (std::abs(value) > worst.value) {
      worst.value = std::abs(value);
      worst.label = std::string(family) + "[" + std::to_string(i) + "]";
    }
  };
  for (int i = 0; i < n; ++i) {
    double hv_in = 0.0, av_in = 0.0, y_in = 0.0, r_in = 0.0;
    double y_out = 0.0, r_out = 0.0;
    for (int j = 0; j < n; ++j) {
      hv_in += a(j, i) * u(j);
      av_in += a(j, i) * v(j);
      y_in += flows.y(j, i);
      r_in += flows.r(j, i);
      y_out += flows.y(i, j);
      r_out += flows.r(i, j);
    }
    consider(flows.x(i) - beta * (hv_in + y_in) - flows.delta(i), "x-balance",
             i);
    consider(y_out - (flows.x(i) - u(i)), "y-total", i);
    consider(flows.z(i) - av_in - r_in, "z-balance", i);
    consider(r_out - (flows.z(i) - v(i)), "r-total", i);
  }
  if (worst.label.empty()) worst.label = "none";
  return worst;
}

// Projects a reported operating point back into the decision vector of a
// build (the two relocation layers fold back into the formulation's single
// layer for the priority rules).
Vec map_report_primal(const ProblemBuild& b, const RecoveredFlows& f) {
  const IndexMap& ix = b.idx;
  const int n = ix.n;
  Vec v = Vec::Zero(ix.total);
  for (int i = 0; i < n; ++i) {
    v(ix.d(i)) = f.d(i);
    if (ix.has_delta()) v(ix.delta(i)) = f.delta(i);
    if (ix.has_x()) v(ix.x(i)) = f.x(i);
    if (ix.has_z()) v(ix.z(i)) = f.z(i);
  }
  if (ix.has_xa()) {
    // Service-split layout: the served shares and the demand slack are
    // functions of the reported point under the assignment rule.
    Vec served_hv, served_av;
    serve_split(b.assignment, f.d, f.x, f.z, served_hv, served_av);
    for (int i = 0; i < n; ++i) {
      v(ix.xa(i)) = served_hv(i);
      v(ix.s(i)) = f.d(i) - served_hv(i);
      for (int j = 0; j < n; ++j) {
        v(ix.y(i, j)) = f.y(i, j);
        v(ix.r(i, j)) = f.r(i, j);
      }
    }
    return v;
  }
  Mat merged = f.y + f.r;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (b.mode == DeploymentMode::Mixed &&
          b.assignment == Assignment::Weighted) {
        v(ix.y(i, j)) = f.y(i, j);
        v(ix.r(i, j)) = f.r(i, j);
      } else if (ix.has_y()) {
        v(ix.y(i, j)) = merged(i, j);
      } else if (ix.has_r()) {
        v(ix.r(i, j)) = merged(i, j);
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_solve(const std::string& scenario_path, const std::string& assignment,
              const std::string& mode, const std::string& out_path,
              const std::string& dump_path, const GlobalOpts& g,
              std::ostream& out, std::ostream& err) {
  Scenario sc = load_scenario(scenario_path);
  warn_if_degenerate(sc.params, err);
  const Assignment asg = parse_assignment(assignment);
  const DeploymentMode dm = parse_mode(mode);
  if (!dump_path.empty()) {
    const ProblemBuild build =
        build_alternative(sc.pattern, sc.params, asg, dm);
    if (dump_path == "-") {
      out << qp::dump_problem(build.qp);
    } else {
      std::ofstream df(dump_path);
      if (!df) {
        err << "error: cannot open " << dump_path << "\n";
        return 1;
      }
      df << qp::dump_problem(build.qp);
    }
  }
  const SolveOutcome res =
      solve_equilibrium(sc.pattern, sc.params, asg, dm, make_options(g));
  if (!out_path.empty()) write_report(res.report, out_path);
  out << "profit=" << fmt12(res.report.solution.profit)
      << " regime=" << to_string(res.report.regime) << "\n";
  return 0;
}

int cmd_sweep(const std::string& scenario_path, double k_from, double k_to,
              double k_step, const std::string& assignment,
              const std::string& out_path, const GlobalOpts& g, std::ostream& out,
              std::ostream& err) {
  if (!(k_from >= 0.0) || !(k_from < k_to) || !(k_step > 0.0)) {
    err << "error: need 0 <= k-from < k-to and k-step > 0\n";
    return 1;
  }
  Scenario sc = load_scenario(scenario_path);
  const Assignment asg = parse_assignment(assignment);
  std::ofstream csv(out_path);
  if (!csv) {
    err << "error: cannot open " << out_path << "\n";
    return 1;
  }
  const SolverOptions opts = make_options(g);

  csv << "k,profit_mixed,profit_forced_hv,profit_forced_av,sum_x,sum_z,"
         "regime_numeric,regime_analytic\n";
  const int count =
      static_cast<int>(std::floor((k_to - k_from) / k_step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) {
    const double k = k_from + i * k_step;
    const EconomicParams params = sc.params.with_k(k);
    const SolveOutcome mixed = solve_equilibrium(
        sc.pattern, params, asg, DeploymentMode::Mixed, opts);
    const SolveOutcome fhv = solve_equilibrium(
        sc.pattern, params, asg, DeploymentMode::ForcedHvOnly, opts);
    const SolveOutcome fav = solve_equilibrium(
        sc.pattern, params, asg, DeploymentMode::ForcedAvOnly, opts);
    std::string analytic = "n/a";
    if (sc.star) {
      analytic = to_string(classify_regime(*sc.star, params.beta(), k));
    }
    csv << fmt12(k) << "," << fmt12(mixed.report.solution.profit) << ","
        << fmt12(fhv.report.solution.profit) << ","
        << fmt12(fav.report.solution.profit) << ","
        << fmt12(mixed.report.solution.x.sum()) << ","
        << fmt12(mixed.report.solution.z.sum()) << ","
        << to_string(mixed.report.regime) << "," << analytic << "\n";
  }
  out << "wrote " << count << " rows to " << out_path << "\n";
  return 0;
}

int cmd_thresholds(int n, double xi, double beta, bool compact,
                   std::ostream& out) {
  StarCompleteSpec spec{n, xi};
  const ThresholdSet t = compute_thresholds(spec, beta);
  const nlohmann::ordered_json j = thresholds_to_json(t);
  out << (compact ? j.dump() : j.dump(2)) << "\n";
  return 0;
}

int cmd_verify(const std::string& report_path, const std::string& scenario_path,
               const std::string& assignment, const std::string& mode,
               const GlobalOpts& g, std::ostream& out, std::ostream& err) {
  Scenario sc = load_scenario(scenario_path);
  const SolveReport rep = read_report(report_path);
  const int n = sc.pattern.n();
  if (rep.solution.p.size() != n) {
    throw ModelError(ModelErrc::DimensionMismatch,
                     "report and scenario disagree on the location count");
  }
  const Assignment asg = parse_assignment(assignment);
  const DeploymentMode dm = parse_mode(mode);

  RecoveredFlows flows;
  flows.d = rep.solution.d;
  flows.delta = rep.solution.delta;
  flows.x = rep.solution.x;
  flows.z = rep.solution.z;
  flows.y = rep.solution.y;
  flows.r = rep.solution.r;

  const LabeledResidual eq =
      labeled_equilibrium_residual(flows, sc.pattern, sc.params, asg);
  const ExpectedEarnings earn = expected_earnings(
      flows, rep.solution.c, sc.pattern, sc.params, asg);
  const double earn_resid = earnings_residual(earn, flows, sc.params);

  // First-order certificate: duals come from a fresh run of the solve
  // pipeline (which also reproduces the program the optimum was taken
  // over); the reported point is tested against them.
  const SolveOutcome fresh =
      solve_equilibrium(sc.pattern, sc.params, asg, dm, make_options(g));
  qp::QpResult qpres = fresh.qp;
  qpres.primal = map_report_primal(fresh.build, flows);
  const double kkt =
      kkt_max_violation(fresh.build, qpres, sc.pattern, sc.params);

  const double recomputed_profit = solution_objective(rep.solution, sc.params);
  out << "equilibrium_residual=" << fmt12(eq.value) << " (worst: " << eq.label
      << ")\n";
  out << "earnings_residual=" << fmt12(earn_resid) << "\n";
  out << "kkt_max_violation=" << fmt12(kkt) << "\n";
  if (std::abs(recomputed_profit - rep.solution.profit) > 1e-6) {
    err << "note: stored profit " << fmt12(rep.solution.profit)
        << " differs from recomputed " << fmt12(recomputed_profit) << "\n";
  }

  constexpr double gate = 1e-6;
  double worst_val = eq.value;
  std::string worst_label = eq.label;
  if (earn_resid > worst_val) {
    worst_val = earn_resid;
    worst_label = "driver-earnings";
  }
  if (kkt > worst_val) {
    worst_val = kkt;
    worst_label = "first-order-certificate";
  }
  if (worst_val > gate) {
    err << "verification failed: " << worst_label << " residual "
        << fmt12(worst_val) << " exceeds " << fmt12(gate) << "\n";
    return 2;
  }
  out << "verified\n";
  return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& assignment,
                 int steps, double perturb, const std::string& out_path,
                 const GlobalOpts& g, std::ostream& out, std::ostream& err) {
  if (steps < 1) {
    err << "error: --steps must be >= 1\n";
    return 1;
  }
  if (perturb <= -1.0) {
    err << "error: --perturb must be > -1\n";
    return 1;
  }
  Scenario sc = load_scenario(scenario_path);
  warn_if_degenerate(sc.params, err);
  const Assignment asg = parse_assignment(assignment);
  const SolveOutcome res = solve_equilibrium(
      sc.pattern, sc.params, asg, DeploymentMode::Mixed, make_options(g));
  const EquilibriumSolution& sol = res.report.solution;

  const RelocationPolicy policy = induced_policy(sol.y, sol.r);
  FleetState initial{sol.x * (1.0 + perturb), sol.z * (1.0 + perturb)};
  const IterationResult it =
      iterate_to_fixed_point(initial, sol.p, sol.delta, policy, sc.pattern,
                             sc.params, asg, steps, 1e-9);

  if (!out_path.empty()) {
    std::ofstream csv(out_path);
    if (!csv) {
      err << "error: cannot open " << out_path << "\n";
      return 1;
    }
    csv << "step,sum_x,sum_z,max_state_delta\n";
    for (const TrajectoryPoint& pt : it.trajectory) {
      csv << pt.step << "," << fmt12(pt.sum_x) << "," << fmt12(pt.sum_z)
          << "," << fmt12(pt.max_state_delta) << "\n";
    }
  }
  out << "converged=" << (it.converged ? "true" : "false")
      << " steps=" << it.steps << "\n";
  return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{
      "ridemix: profit-maximizing equilibria of mixed human-driven / "
      "autonomous ride-sharing networks"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--tol-primal", g.tol_primal,
                 "solver primal feasibility tolerance")
      ->capture_default_str();
  app.add_option("--tol-dual", g.tol_dual, "solver dual residual tolerance")
      ->capture_default_str();
  app.add_option("--max-iter", g.max_iter, "solver iteration cap")
      ->capture_default_str();
  app.add_option("--seed", g.seed,
                 "seed for randomized scenario generation (never affects "
                 "solves)");

  std::string scenario, assignment = "hv", mode = "mixed", out_path,
              dump_path, report_path;
  double k_from = 0.0, k_to = 0.0, k_step = 0.0, xi = 0.0, beta = 0.0,
         perturb = 0.0;
  int n = 3, steps = 200;
  bool compact = false;

  CLI::App* solve = app.add_subcommand("solve", "solve one scenario");
  solve->add_option("scenario", scenario, "scenario JSON path")->required();
  solve->add_option("--assignment", assignment, "hv | av | weighted");
  solve->add_option("--mode", mode, "mixed | hv-only | av-only");
  solve->add_option("--out", out_path, "write the solve report JSON here");
  solve->add_option("--dump-qp", dump_path,
                    "dump the assembled program ('-' for stdout)");

  CLI::App* sweep =
      app.add_subcommand("sweep", "profit sweep over the AV cost ratio k");
  sweep->add_option("scenario", scenario, "scenario JSON path")->required();
  sweep->add_option("--k-from", k_from, "sweep start")->required();
  sweep->add_option("--k-to", k_to, "sweep end (inclusive)")->required();
  sweep->add_option("--k-step", k_step, "grid step")->required();
  sweep->add_option("--assignment", assignment, "hv | av | weighted");
  sweep->add_option("--out", out_path, "CSV output path")->required();

  CLI::App* thresholds = app.add_subcommand(
      "thresholds", "closed-form regime thresholds (star-to-complete family)");
  thresholds->add_option("--n", n, "location count (>= 3)")->required();
  thresholds->add_option("--xi", xi, "interpolation parameter in [0, 1]")
      ->required();
  thresholds->add_option("--beta", beta, "survival probability in (0, 1)")
      ->required();
  thresholds->add_flag("--json", compact, "compact single-line JSON");

  CLI::App* verify =
      app.add_subcommand("verify", "re-check a solve report against a scenario");
  verify->add_option("report", report_path, "solve report JSON path")
      ->required();
  verify->add_option("scenario", scenario, "scenario JSON path")->required();
  verify->add_option("--assignment", assignment, "hv | av | weighted");
  verify->add_option("--mode", mode, "mixed | hv-only | av-only");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "iterate the fleet dynamics from a perturbed optimum");
  simulate->add_option("scenario", scenario, "scenario JSON path")->required();
  simulate->add_option("--assignment", assignment, "hv | av | weighted");
  simulate->add_option("--steps", steps, "maximum steps (>= 1)")
      ->capture_default_str();
  simulate->add_option("--perturb", perturb,
                       "multiplicative fleet perturbation (1 + perturb)")
      ->capture_default_str();
  simulate->add_option("--out", out_path, "trajectory CSV path");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("ridemix");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(solve)) {
      return cmd_solve(scenario, assignment, mode, out_path, dump_path, g, out,
                       err);
    }
    if (app.got_subcommand(sweep)) {
      return cmd_sweep(scenario, k_from, k_to, k_step, assignment, out_path, g,
                       out, err);
    }
    if (app.got_subcommand(thresholds)) {
      return cmd_thresholds(n, xi, beta, compact, out);
    }
    if (app.got_subcommand(verify)) {
      return cmd_verify(report_path, scenario, assignment, mode, g, out, err);
    }
    if (app.got_subcommand(simulate)) {
      return cmd_simulate(scenario, assignment, steps, perturb, out_path, g,
                          out, err);
    }
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace ridemix
