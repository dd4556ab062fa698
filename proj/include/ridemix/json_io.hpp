// Scenario and report serialization.  A scenario JSON document carries the
// network either explicitly ("n"/"alpha"/"theta") or through the
// star-to-complete shorthand ("star_to_complete": {"n", "xi"}), plus the
// economics ("beta", "omega", "pbar", and exactly one of "s" or "k").
// Solve reports round-trip through JSON with a stable field order so output
// is byte-identical run to run.
#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "ridemix/model.hpp"
#include "ridemix/solver.hpp"
#include "ridemix/star.hpp"

namespace ridemix {

// A parsed scenario.  `star` is set iff the shorthand form was used; sweeps
// use it to add analytic regime columns.
struct Scenario {
  DemandPattern pattern;
  EconomicParams params;
  std::optional<StarCompleteSpec> star;
};

// Parses scenario text / file.  Throws ModelError(BadParams) on schema
// violations (missing keys, both or neither of s/k, both or neither of the
// explicit and shorthand network forms), pattern-validation errors from
// validate_demand_pattern, and nlohmann parse errors on malformed JSON.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

// SolveReport <-> JSON (stable field order: profit, regime, p, c, d, delta,
// x, z, y, r, equilibrium_residual, earnings_residual, kkt_max_violation).
nlohmann::ordered_json report_to_json(const SolveReport& report);
SolveReport report_from_json(const nlohmann::ordered_json& j);
void write_report(const SolveReport& report, const std::string& path);
SolveReport read_report(const std::string& path);

// ThresholdSet -> JSON (k1, k2, k3, k4, beta_lim, case_k3_ge_k1).
nlohmann::ordered_json thresholds_to_json(const ThresholdSet& t);

}  // namespace ridemix
