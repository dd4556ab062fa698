#include "ridemix/json_io.hpp"

#include <fstream>
#include <sstream>

namespace ridemix {

using nlohmann::ordered_json;

namespace {

double require_number(const ordered_json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ModelError(ModelErrc::BadParams,
                     std::string("scenario: missing or non-numeric \"") + key +
                         "\"");
  }
  return j.at(key).get<double>();
}

Vec read_vec(const ordered_json& j, int n, const char* key) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw ModelError(ModelErrc::DimensionMismatch,
                     std::string("\"") + key + "\" must be an array of length " +
                         std::to_string(n));
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    if (!j[i].is_number()) {
      throw ModelError(ModelErrc::BadParams,
                       std::string("\"") + key + "\" contains a non-number");
    }
    v(i) = j[i].get<double>();
  }
  return v;
}

Mat read_mat(const ordered_json& j, int n, const char* key) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw ModelError(ModelErrc::DimensionMismatch,
                     std::string("\"") + key + "\" must be an n-by-n array");
  }
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    m.row(i) = read_vec(j[i], n, key).transpose();
  }
  return m;
}

ordered_json vec_to_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json mat_to_json(const Mat& m) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  if (!j.is_object()) {
    throw ModelError(ModelErrc::BadParams, "scenario: top level must be an object");
  }

  const bool shorthand = j.contains("star_to_complete");
  const bool explicit_net =
      j.contains("alpha") || j.contains("theta") || j.contains("n");
  if (shorthand == explicit_net) {
    throw ModelError(ModelErrc::BadParams,
                     "scenario: give exactly one of the explicit network "
                     "(n/alpha/theta) or the star_to_complete shorthand");
  }

  std::optional<StarCompleteSpec> star;
  std::optional<DemandPattern> pattern;
  if (shorthand) {
    const auto& sj = j.at("star_to_complete");
    if (!sj.is_object()) {
      throw ModelError(ModelErrc::BadParams,
                       "scenario: star_to_complete must be an object");
    }
    StarCompleteSpec spec;
    spec.n = static_cast<int>(require_number(sj, "n"));
    spec.xi = require_number(sj, "xi");
    pattern = build_star_to_complete(spec);
    star = spec;
  } else {
    if (!j.contains("n") || !j.at("n").is_number_integer()) {
      throw ModelError(ModelErrc::BadParams,
                       "scenario: missing or non-integer \"n\"");
    }
    const int n = j.at("n").get<int>();
    if (!j.contains("alpha") || !j.contains("theta")) {
      throw ModelError(ModelErrc::BadParams,
                       "scenario: explicit form needs \"alpha\" and \"theta\"");
    }
    pattern = validate_demand_pattern(n, read_mat(j.at("alpha"), n, "alpha"),
                                      read_vec(j.at("theta"), n, "theta"));
  }

  const double beta = require_number(j, "beta");
  const double omega = require_number(j, "omega");
  const double pbar = require_number(j, "pbar");
  const bool has_s = j.contains("s"), has_k = j.contains("k");
  if (has_s == has_k) {
    throw ModelError(ModelErrc::BadParams,
                     "scenario: give exactly one of \"s\" or \"k\"");
  }
  EconomicParams params =
      has_s ? EconomicParams::from_s(beta, omega, require_number(j, "s"), pbar)
            : EconomicParams::from_k(beta, omega, require_number(j, "k"), pbar);

  return Scenario{std::move(*pattern), params, star};
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ModelError(ModelErrc::BadParams,
                     "scenario: cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

ordered_json report_to_json(const SolveReport& report) {
  const EquilibriumSolution& s = report.solution;
  ordered_json j;
  j["profit"] = s.profit;
  j["regime"] = std::string(to_string(report.regime));
  j["p"] = vec_to_json(s.p);
  j["c"] = vec_to_json(s.c);
  j["d"] = vec_to_json(s.d);
  j["delta"] = vec_to_json(s.delta);
  j["x"] = vec_to_json(s.x);
  j["z"] = vec_to_json(s.z);
  j["y"] = mat_to_json(s.y);
  j["r"] = mat_to_json(s.r);
  j["equilibrium_residual"] = report.equilibrium_residual;
  j["earnings_residual"] = report.earnings_residual;
  j["kkt_max_violation"] = report.kkt_max_violation;
  return j;
}

SolveReport report_from_json(const ordered_json& j) {
  for (const char* key :
       {"profit", "regime", "p", "c", "d", "delta", "x", "z", "y", "r",
        "equilibrium_residual", "earnings_residual", "kkt_max_violation"}) {
    if (!j.contains(key)) {
      throw ModelError(ModelErrc::BadParams,
                       std::string("report: missing \"") + key + "\"");
    }
  }
  const int n = static_cast<int>(j.at("p").size());
  SolveReport rep;
  rep.solution.p = read_vec(j.at("p"), n, "p");
  rep.solution.c = read_vec(j.at("c"), n, "c");
  rep.solution.d = read_vec(j.at("d"), n, "d");
  rep.solution.delta = read_vec(j.at("delta"), n, "delta");
  rep.solution.x = read_vec(j.at("x"), n, "x");
  rep.solution.z = read_vec(j.at("z"), n, "z");
  rep.solution.y = read_mat(j.at("y"), n, "y");
  rep.solution.r = read_mat(j.at("r"), n, "r");
  rep.solution.profit = j.at("profit").get<double>();
  rep.regime = parse_regime(j.at("regime").get<std::string>());
  rep.equilibrium_residual = j.at("equilibrium_residual").get<double>();
  rep.earnings_residual = j.at("earnings_residual").get<double>();
  rep.kkt_max_violation = j.at("kkt_max_violation").get<double>();
  return rep;
}

void write_report(const SolveReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw ModelError(ModelErrc::BadParams, "report: cannot open for writing: " + path);
  }
  out << report_to_json(report).dump(2) << "\n";
}

SolveReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ModelError(ModelErrc::BadParams, "report: cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(ordered_json::parse(buf.str()));
}

ordered_json thresholds_to_json(const ThresholdSet& t) {
  ordered_json j;
  j["k1"] = t.k1;
  j["k2"] = t.k2;
  j["k3"] = t.k3;
  j["k4"] = t.k4;
  j["beta_lim"] = t.beta_lim;
  j["case_k3_ge_k1"] = t.case_k3_ge_k1;
  return j;
}

}  // namespace ridemix
