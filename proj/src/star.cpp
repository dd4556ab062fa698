#include "ridemix/star.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ridemix/solver.hpp"

namespace ridemix {

namespace {
constexpr double kSlack = 1e-12;  // branch/case comparison slack
}

void validate_star_spec(const StarCompleteSpec& spec) {
  if (spec.n < 3) {
    throw ModelError(ModelErrc::BadParams,
                     "star-to-complete family requires n >= 3");
  }
  if (!(spec.xi >= 0.0 && spec.xi <= 1.0)) {
    throw ModelError(ModelErrc::BadParams,
                     "star-to-complete interpolation xi must lie in [0, 1]");
  }
}

DemandPattern build_star_to_complete(const StarCompleteSpec& spec) {
  validate_star_spec(spec);
  const int n = spec.n;
  const double c1 = spec.c1(), c2 = spec.c2();
  Mat alpha = Mat::Zero(n, n);
  for (int j = 1; j < n; ++j) alpha(0, j) = 1.0 / (n - 1);
  for (int i = 1; i < n; ++i) {
    alpha(i, 0) = c1;
    for (int j = 1; j < n; ++j) {
      if (j != i) alpha(i, j) = c2;
    }
  }
  return validate_demand_pattern(n, alpha, Vec::Ones(n));
}

ThresholdSet compute_thresholds(const StarCompleteSpec& spec, double beta) {
  validate_star_spec(spec);
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ModelError(ModelErrc::BadParams,
                     "survival probability beta must lie in (0, 1)");
  }
  const int n = spec.n;
  const double c1 = spec.c1();
  ThresholdSet t;

  t.k1 = (1.0 + beta * c1) / (c1 + 1.0);

  // beta_lim: xi cutoff below which the middle k2 branch is unavailable.
  const double root_arg = (beta * beta * (n - 1) + 4.0 * beta - 4.0) / (n - 1);
  if (root_arg < 0.0) {
    t.beta_lim = 0.0;
  } else {
    const double factor = (n - 1) / (2.0 * (1.0 - beta) * beta * (n - 2));
    t.beta_lim =
        std::max(factor * (beta * (1.0 - 2.0 * beta) + std::sqrt(root_arg)),
                 0.0);
  }

  const double xi_hi = (beta * (n - 1) - 1.0) / (beta * (n - 2));
  if (spec.xi >= xi_hi - kSlack) {
    t.k2 = 1.0;
  } else if (spec.xi >= t.beta_lim - kSlack) {
    const double c1sq = c1 * c1;
    t.k2 = (c1 * (1.0 + beta) + (n - 1) * beta * beta * c1sq * c1 + 1.0) /
           ((c1 + 1.0) * ((n - 1) * beta * beta * c1sq + 1.0));
  } else {
    t.k2 = t.k1;
  }

  t.k3 = ((n - 1) * c1 - 1.0) /
         ((1.0 - beta) * (n - 1) * (1.0 + c1) * c1);
  t.k4 = ((1.0 + beta) * c1 + (n - 1) * beta * c1 * c1 * c1 + 1.0) /
         ((c1 + 1.0) * (beta * (n - 1) * c1 * c1 + 1.0));
  t.case_k3_ge_k1 =
      beta * c1 * (n - 1) * (1.0 - c1 + beta * c1) >= 1.0 - kSlack;
  return t;
}

Regime classify_regime(const StarCompleteSpec& spec, double beta, double k) {
  if (k < 0.0) {
    throw ModelError(ModelErrc::BadParams,
                     "relative AV cost k must be nonnegative");
  }
  const ThresholdSet t = compute_thresholds(spec, beta);
  const double av_edge = t.case_k3_ge_k1 ? t.k1 : t.k4;
  if (k <= av_edge) return Regime::AvOnly;
  if (k < t.k2) return Regime::TrulyMixed;
  return Regime::HvOnly;
}

// ---------------------------------------------------------------------------
// Diagnostic cross-check against the per-region closed-form candidates
// ---------------------------------------------------------------------------

namespace {

struct RegionCandidate {
  std::string name;
  bool feasible = true;
  double profit = 0.0;
};

double sq_revenue(const Vec& p) {
  double v = 0.0;
  for (int i = 0; i < p.size(); ++i) v += p(i) * (1.0 - p(i));
  return v;
}

void mark_feasible(RegionCandidate& cand, const Vec& values) {
  for (int i = 0; i < values.size(); ++i) {
    if (values(i) < -1e-9) cand.feasible = false;
  }
}

}  // namespace

std::string star_region_crosscheck(const StarCompleteSpec& spec, double beta,
                                   double k) {
  validate_star_spec(spec);
  const int n = spec.n;
  const double c1 = spec.c1(), c2 = spec.c2();
  const double s = k * (1.0 - beta);  // unit outside option
  const ThresholdSet th = compute_thresholds(spec, beta);
  std::vector<RegionCandidate> cands;

  // HV-only candidates (one per xi branch of the published solution).
  const double xi_hi = (beta * (n - 1) - 1.0) / (beta * (n - 2));
  if (spec.xi >= xi_hi - kSlack) {
    RegionCandidate c{"hv-only/a"};
    Vec p = Vec::Constant(n, 1.0 - beta / 2.0);
    Vec delta(n);
    delta(0) = (beta - (n - 1) * beta * beta) / 2.0;
    for (int i = 1; i < n; ++i) {
      delta(i) = ((n - 1) * beta - beta * beta) / 4.0;
    }
    mark_feasible(c, delta);
    c.profit = sq_revenue(p) - delta.sum();
    cands.push_back(c);
  } else if (spec.xi >= th.beta_lim - kSlack) {
    RegionCandidate c{"hv-only/b"};
    const double zz = -(n - 1) * c1;
    const double p2 =
        0.5 + (beta * zz * (1.0 + beta * zz + beta) +
               (n - 1) * (1.0 - beta * c2 * (n - 2))) /
                  (2.0 * (n - 1) + 2.0 * beta * beta * zz * zz);
    Vec p = Vec::Constant(n, p2);
    p(0) = 1.0 - beta * c1 * (n - 1) * (1.0 - p2);
    Vec delta = Vec::Zero(n);
    for (int i = 1; i < n; ++i) {
      delta(i) = (1.0 - beta * c2 - beta * beta * c1) * (1.0 - p(i));
    }
    Vec x = Vec::Ones(n) - p;
    mark_feasible(c, delta);
    mark_feasible(c, x);
    c.profit = sq_revenue(p) - delta.sum();
    cands.push_back(c);
  } else {
    RegionCandidate c{"hv-only/c"};
    const double p2 = 0.5 + (1.0 - beta * beta * c1 - beta * (n - 2) * c2) / 2.0;
    Vec p = Vec::Constant(n, p2);
    p(0) = 0.5;
    const double y_hub = beta * c1 * (1.0 - p2) - 1.0 / (2.0 * (n - 1));
    Vec delta = Vec::Zero(n);
    for (int i = 1; i < n; ++i) {
      delta(i) = (1.0 - p2) * (1.0 - beta * c2 - beta * beta * c1);
    }
    mark_feasible(c, delta);
    mark_feasible(c, Vec::Constant(1, y_hub));
    c.profit = sq_revenue(p) - delta.sum();
    cands.push_back(c);
  }

  {  // Mixed candidate.
    RegionCandidate c{"mixed"};
    Vec p(n);
    p(0) = (k * (c1 + 1.0) + (1.0 - beta) * c1 - 1.0) / (2.0 * c1);
    for (int i = 1; i < n; ++i) {
      p(i) = 1.0 - (beta * k * (c1 + 1.0) + beta * c1) / 2.0;
    }
    Vec x(n);
    const double x2 = ((n - 1) * c1 * (1.0 - p(1)) - (1.0 - p(0))) /
                      ((n - 1) * (1.0 - beta) * c1);
    for (int i = 1; i < n; ++i) x(i) = x2;
    x(0) = c1 * (n - 1) * beta * x2;
    Vec z = Vec::Ones(n) - p - x;
    Vec delta = Vec::Zero(n);
    for (int i = 1; i < n; ++i) {
      delta(i) = (1.0 - beta * (1.0 - c1)) * x2 - beta * x(0) / (n - 1);
    }
    mark_feasible(c, x);
    mark_feasible(c, z);
    mark_feasible(c, delta);
    c.profit = sq_revenue(p) - delta.sum() - s * z.sum();
    cands.push_back(c);
  }

  {  // AV-only without relocation.
    RegionCandidate c{"av-only/still"};
    const double c1sq = c1 * c1;
    const double p2 = (2.0 * (n - 1) * c1sq + c1 * (k * (1.0 - beta) - 1.0) +
                       k * (1.0 - beta) + 1.0) /
                      (2.0 * ((n - 1) * c1sq + 1.0));
    Vec p = Vec::Constant(n, p2);
    p(0) = 1.0 - (n - 1) * c1 * (1.0 - p2);
    Vec z = Vec::Ones(n) - p;
    mark_feasible(c, z);
    c.profit = sq_revenue(p) - s * z.sum();
    cands.push_back(c);
  }

  {  // AV-only with hub-outward relocation.
    RegionCandidate c{"av-only/reloc"};
    Vec p(n);
    p(0) = 0.5;
    for (int i = 1; i < n; ++i) {
      p(i) = (1.0 + (c1 + 1.0) * k * (1.0 - beta)) / 2.0;
    }
    Vec z(n);
    z(0) = (n - 1) * c1 * (1.0 - p(1));
    for (int i = 1; i < n; ++i) z(i) = 1.0 - p(i);
    const double r_hub = c1 * (1.0 - p(1)) - 1.0 / (2.0 * (n - 1));
    mark_feasible(c, z);
    mark_feasible(c, Vec::Constant(1, r_hub));
    c.profit = sq_revenue(p) - s * z.sum();
    cands.push_back(c);
  }

  // Numerical reference: mixed deployment under HV priority.
  const DemandPattern pattern = build_star_to_complete(spec);
  const EconomicParams params = EconomicParams::from_k(beta, 1.0, k, 1.0);
  const SolveOutcome ref = solve_equilibrium(
      pattern, params, Assignment::HvPriority, DeploymentMode::Mixed);

  std::ostringstream os;
  os.precision(10);
  os << "star-region crosscheck n=" << n << " xi=" << spec.xi
     << " beta=" << beta << " k=" << k
     << " numeric_profit=" << ref.report.solution.profit
     << " numeric_regime=" << to_string(ref.report.regime);
  double best = -1e300;
  std::string best_name = "none";
  for (const auto& c : cands) {
    os << " | " << c.name << (c.feasible ? "" : "[infeasible]") << "="
       << c.profit;
    if (c.feasible && c.profit > best) {
      best = c.profit;
      best_name = c.name;
    }
  }
  os << " | best_feasible=" << best_name;
  if (best > -1e299) {
    os << " gap=" << (ref.report.solution.profit - best);
  }
  return os.str();
}

}  // namespace ridemix
