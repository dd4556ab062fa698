// Python bindings for the core operations: scenario parsing, equilibrium
// solves, star-family thresholds, and the forward fleet dynamics.  Structured
// results cross the boundary as JSON strings; the pure-python wrapper in
// python/ridemix/__init__.py decodes them into dicts so this translation unit
// stays free of container conversions.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ridemix/dynamics.hpp"
#include "ridemix/json_io.hpp"
#include "ridemix/model.hpp"
#include "ridemix/solver.hpp"
#include "ridemix/star.hpp"

namespace py = pybind11;

namespace {

ridemix::EconomicParams make_params(double beta, double omega, double pbar,
                                    std::optional<double> s,
                                    std::optional<double> k) {
  if (s.has_value() == k.has_value()) {
    throw ridemix::ModelError(ridemix::ModelErrc::BadParams,
                              "exactly one of s and k must be given");
  }
  return s ? ridemix::EconomicParams::from_s(beta, omega, *s, pbar)
           : ridemix::EconomicParams::from_k(beta, omega, *k, pbar);
}

std::string solve_pattern_json(const ridemix::DemandPattern& pattern,
                               const ridemix::EconomicParams& params,
                               const std::string& assignment,
                               const std::string& mode) {
  const auto outcome = ridemix::solve_equilibrium(
      pattern, params, ridemix::parse_assignment(assignment),
      ridemix::parse_mode(mode));
  return ridemix::report_to_json(outcome.report).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Core solver for mixed human-driven / autonomous ride-sharing markets";

  py::register_exception<ridemix::ModelError>(m, "ModelError");

  m.def(
      "solve",
      [](const Eigen::MatrixXd& alpha, const Eigen::VectorXd& theta,
         double beta, double omega, double pbar, std::optional<double> s,
         std::optional<double> k, const std::string& assignment,
         const std::string& mode) {
        const auto pattern = ridemix::validate_demand_pattern(
            static_cast<int>(theta.size()), alpha, theta);
        return solve_pattern_json(pattern,
                                  make_params(beta, omega, pbar, s, k),
                                  assignment, mode);
      },
      py::arg("alpha"), py::arg("theta"), py::arg("beta"), py::arg("omega"),
      py::arg("pbar"), py::arg("s") = std::nullopt,
      py::arg("k") = std::nullopt, py::arg("assignment") = "hv",
      py::arg("mode") = "mixed",
      "Solve for the profit-maximizing equilibrium; returns the report as a "
      "JSON string.");

  m.def(
      "solve_scenario",
      [](const std::string& text, const std::string& assignment,
         const std::string& mode) {
        const auto scenario = ridemix::parse_scenario(text);
        return solve_pattern_json(scenario.pattern, scenario.params,
                                  assignment, mode);
      },
      py::arg("scenario_json"), py::arg("assignment") = "hv",
      py::arg("mode") = "mixed",
      "Solve a scenario given as JSON text; returns the report as a JSON "
      "string.");

  m.def(
      "thresholds",
      [](int n, double xi, double beta) {
        const ridemix::StarCompleteSpec spec{n, xi};
        ridemix::validate_star_spec(spec);
        return ridemix::thresholds_to_json(
                   ridemix::compute_thresholds(spec, beta))
            .dump();
      },
      py::arg("n"), py::arg("xi"), py::arg("beta"),
      "Regime thresholds of the star-to-complete family as a JSON string.");

  m.def(
      "classify_regime",
      [](int n, double xi, double beta, double k) {
        const ridemix::StarCompleteSpec spec{n, xi};
        ridemix::validate_star_spec(spec);
        return std::string(
            ridemix::to_string(ridemix::classify_regime(spec, beta, k)));
      },
      py::arg("n"), py::arg("xi"), py::arg("beta"), py::arg("k"),
      "Closed-form regime of the star-to-complete family at cost ratio k.");

  m.def(
      "star_alpha",
      [](int n, double xi) {
        const ridemix::StarCompleteSpec spec{n, xi};
        ridemix::validate_star_spec(spec);
        return Eigen::MatrixXd(ridemix::build_star_to_complete(spec).alpha());
      },
      py::arg("n"), py::arg("xi"),
      "Routing matrix of the star-to-complete family member.");

  m.def(
      "simulate",
      [](const std::string& scenario_json, const std::string& assignment,
         int steps, double perturb) {
        const auto scenario = ridemix::parse_scenario(scenario_json);
        const auto outcome = ridemix::solve_equilibrium(
            scenario.pattern, scenario.params,
            ridemix::parse_assignment(assignment),
            ridemix::DeploymentMode::Mixed);
        const auto& sol = outcome.report.solution;
        const auto policy = ridemix::induced_policy(sol.y, sol.r);
        ridemix::FleetState initial{ridemix::Vec((1.0 + perturb) * sol.x),
                                    ridemix::Vec((1.0 + perturb) * sol.z)};
        const auto iter = ridemix::iterate_to_fixed_point(
            initial, sol.p, sol.delta, policy, scenario.pattern,
            scenario.params, ridemix::parse_assignment(assignment), steps,
            1e-9);
        nlohmann::ordered_json j;
        j["converged"] = iter.converged;
        j["steps"] = iter.steps;
        auto rows = nlohmann::ordered_json::array();
        for (const auto& pt : iter.trajectory) {
          rows.push_back({{"step", pt.step},
                          {"sum_x", pt.sum_x},
                          {"sum_z", pt.sum_z},
                          {"max_state_delta", pt.max_state_delta}});
        }
        j["trajectory"] = rows;
        return j.dump();
      },
      py::arg("scenario_json"), py::arg("assignment") = "hv",
      py::arg("steps") = 1000, py::arg("perturb") = 0.1,
      "Solve, perturb the fleets, and run the forward dynamics back to the "
      "fixed point; returns a JSON string.");
}
