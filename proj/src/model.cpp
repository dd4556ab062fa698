#include "ridemix/model.hpp"

#include <cmath>
#include <vector>

namespace ridemix {
namespace {

// One directed reachability pass over the support graph of alpha (or its
// transpose), starting from location 0.  Returns true iff every location is
// reached.
bool all_reachable(const Mat& alpha, bool transpose) {
  const int n = static_cast<int>(alpha.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      const double a = transpose ? alpha(j, i) : alpha(i, j);
      if (a > 0.0 && !seen[j]) {
        seen[j] = 1;
        ++count;
        stack.push_back(j);
      }
    }
  }
  return count == n;
}

}  // namespace

DemandPattern validate_demand_pattern(int n, const Mat& alpha, const Vec& theta,
                                      const ValidationTolerances& tol) {
  if (n < 2) {
    throw ModelError(ModelErrc::TooSmall,
                     "need at least 2 locations, got " + std::to_string(n));
  }
  if (alpha.rows() != n || alpha.cols() != n || theta.size() != n) {
    throw ModelError(ModelErrc::DimensionMismatch,
                     "alpha must be n x n and theta length n");
  }
  for (int i = 0; i < n; ++i) {
    if (!(theta(i) > 0.0)) {
      throw ModelError(ModelErrc::NonPositiveTheta,
                       "theta[" + std::to_string(i) + "] must be > 0", i);
    }
    if (std::abs(alpha(i, i)) > 0.0) {
      throw ModelError(ModelErrc::NonzeroDiagonal,
                       "alpha[" + std::to_string(i) + "][" + std::to_string(i) +
                           "] must be 0",
                       i, i);
    }
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = alpha(i, j);
      if (a < 0.0 || a > 1.0) {
        throw ModelError(ModelErrc::NegativeEntry,
                         "alpha[" + std::to_string(i) + "][" +
                             std::to_string(j) + "] outside [0,1]",
                         i, j);
      }
      row_sum += a;
    }
    if (std::abs(row_sum - 1.0) > tol.row_sum) {
      throw ModelError(ModelErrc::BadRowSum,
                       "alpha row " + std::to_string(i) + " sums to " +
                           std::to_string(row_sum) + ", expected 1",
                       i);
    }
  }
  // Strong connectivity: everyone reachable from 0 along edges, and 0
  // reachable from everyone (reverse pass).
  if (!all_reachable(alpha, /*transpose=*/false) ||
      !all_reachable(alpha, /*transpose=*/true)) {
    throw ModelError(ModelErrc::NotStronglyConnected,
                     "routing graph is not strongly connected");
  }
  return DemandPattern(alpha, theta);
}

EconomicParams::EconomicParams(double beta, double omega, double s, double pbar)
    : beta_(beta), omega_(omega), s_(s), pbar_(pbar) {
  if (!(beta > 0.0) || !(beta < 1.0)) {
    throw ModelError(ModelErrc::BadParams,
                     "beta must lie in the open interval (0, 1)");
  }
  if (!(omega > 0.0)) {
    throw ModelError(ModelErrc::BadParams, "omega must be > 0");
  }
  if (!(s >= 0.0)) {
    throw ModelError(ModelErrc::BadParams, "av_cost_s must be >= 0");
  }
  if (!(pbar > 0.0)) {
    throw ModelError(ModelErrc::BadParams, "pbar must be > 0");
  }
}

EconomicParams EconomicParams::from_s(double beta, double omega, double s,
                                      double pbar) {
  return EconomicParams(beta, omega, s, pbar);
}

EconomicParams EconomicParams::from_k(double beta, double omega, double k,
                                      double pbar) {
  if (!(beta > 0.0) || !(beta < 1.0)) {
    throw ModelError(ModelErrc::BadParams,
                     "beta must lie in the open interval (0, 1)");
  }
  return EconomicParams(beta, omega, k * omega * (1.0 - beta), pbar);
}

std::string_view to_string(Assignment a) {
  switch (a) {
    case Assignment::HvPriority: return "hv";
    case Assignment::AvPriority: return "av";
    case Assignment::Weighted: return "weighted";
  }
  return "?";
}

std::string_view to_string(DeploymentMode m) {
  switch (m) {
    case DeploymentMode::Mixed: return "mixed";
    case DeploymentMode::ForcedHvOnly: return "hv-only";
    case DeploymentMode::ForcedAvOnly: return "av-only";
  }
  return "?";
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::HvOnly: return "HvOnly";
    case Regime::AvOnly: return "AvOnly";
    case Regime::TrulyMixed: return "TrulyMixed";
  }
  return "?";
}

Assignment parse_assignment(std::string_view s) {
  if (s == "hv") return Assignment::HvPriority;
  if (s == "av") return Assignment::AvPriority;
  if (s == "weighted") return Assignment::Weighted;
  throw ModelError(ModelErrc::BadParams,
                   "unknown assignment '" + std::string(s) +
                       "' (expected hv|av|weighted)");
}

DeploymentMode parse_mode(std::string_view s) {
  if (s == "mixed") return DeploymentMode::Mixed;
  if (s == "hv-only") return DeploymentMode::ForcedHvOnly;
  if (s == "av-only") return DeploymentMode::ForcedAvOnly;
  throw ModelError(ModelErrc::BadParams,
                   "unknown mode '" + std::string(s) +
                       "' (expected mixed|hv-only|av-only)");
}

Regime parse_regime(std::string_view s) {
  if (s == "HvOnly") return Regime::HvOnly;
  if (s == "AvOnly") return Regime::AvOnly;
  if (s == "TrulyMixed") return Regime::TrulyMixed;
  throw ModelError(ModelErrc::BadParams,
                   "unknown regime '" + std::string(s) + "'");
}

double solution_objective(const EquilibriumSolution& sol,
                          const EconomicParams& params) {
  return sol.p.dot(sol.d) - params.omega() * sol.delta.sum() -
         params.av_cost_s() * sol.z.sum();
}

Vec demand_from_price(const Vec& p, const DemandPattern& pattern,
                      const EconomicParams& params) {
  const int n = pattern.n();
  if (p.size() != n) {
    throw ModelError(ModelErrc::DimensionMismatch, "price vector length != n");
  }
  Vec d(n);
  for (int i = 0; i < n; ++i) {
    if (p(i) < 0.0 || p(i) > params.pbar()) {
      throw ModelError(ModelErrc::PriceOutOfRange,
                       "p[" + std::to_string(i) + "] outside [0, pbar]", i);
    }
    d(i) = pattern.theta()(i) * (1.0 - p(i) / params.pbar());
  }
  return d;
}

Vec price_from_demand(const Vec& d, const DemandPattern& pattern,
                      const EconomicParams& params) {
  const int n = pattern.n();
  if (d.size() != n) {
    throw ModelError(ModelErrc::DimensionMismatch, "demand vector length != n");
  }
  Vec p(n);
  for (int i = 0; i < n; ++i) {
    p(i) = params.pbar() * (1.0 - d(i) / pattern.theta()(i));
  }
  return p;
}

}  // namespace ridemix
