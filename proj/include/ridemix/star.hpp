// Closed-form analysis of the star-to-complete network family: a one-
// parameter interpolation between a star (all peripheral demand routed to a
// hub) and the complete uniform network.  For this family the cost ratio
// axis splits into AV-only, truly-mixed, and HV-only regimes with explicit
// thresholds; this module evaluates those thresholds and the induced regime
// map, and offers a diagnostic hook comparing the (known-fragile) per-region
// closed-form candidates against the numerical solver.
#pragma once

#include <string>

#include "ridemix/model.hpp"

namespace ridemix {

// The family member: n locations (hub = location 0), interpolation xi in
// [0, 1].  xi = 0 is the pure star, xi = 1 the complete network.
struct StarCompleteSpec {
  int n = 3;
  double xi = 0.0;

  // Routing weight from a peripheral location toward the hub (c1) and toward
  // each other peripheral location (c2); rows sum to 1 by construction.
  double c1() const { return xi / (n - 1) + (1.0 - xi); }
  double c2() const { return xi / (n - 1); }
};

// Throws ModelError(BadParams) unless n >= 3 and xi in [0, 1].
void validate_star_spec(const StarCompleteSpec& spec);

// Materializes the routing matrix (hub row uniform over the periphery,
// peripheral rows c1 toward the hub and c2 elsewhere) with unit rider mass
// everywhere, and runs it through full pattern validation.
DemandPattern build_star_to_complete(const StarCompleteSpec& spec);

// Regime thresholds on the relative AV cost axis k.
//   k1 — AV-only guaranteed below this when the k3 >= k1 case holds;
//   k2 — HV-only guaranteed at and above this;
//   k3 — where AV relocation flows vanish inside the AV-only regime;
//   k4 — AV-only upper edge in the k3 < k1 case;
//   beta_lim — xi cutoff selecting the k2 branch (0 when its square root
//              would go imaginary, which happens for small beta);
//   case_k3_ge_k1 — which of the two decision trees applies, decided by the
//              equivalent polynomial condition beta*c1*(n-1)*(1-c1+beta*c1)
//              vs 1.
struct ThresholdSet {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  double beta_lim = 0.0;
  bool case_k3_ge_k1 = true;
};

// Evaluates the thresholds for the family member at survival probability
// beta (must lie in (0, 1); throws BadParams otherwise).
ThresholdSet compute_thresholds(const StarCompleteSpec& spec, double beta);

// Closed-form regime at relative AV cost k >= 0, with interval endpoints
// treated exactly as stated: AV-only on the closed lower interval, mixed on
// the open middle interval, HV-only from k2 upward.
Regime classify_regime(const StarCompleteSpec& spec, double beta, double k);

// Diagnostic only: evaluates the per-region closed-form candidate operating
// points (prices, masses, entry) at unit rider mass / unit price cap / unit
// outside option, marks each candidate feasible or not, and reports their
// objectives next to the numerically solved profit.  Some published
// candidates are infeasible in parts of the parameter range, so callers log
// this output and never assert on it.
std::string star_region_crosscheck(const StarCompleteSpec& spec, double beta,
                                   double k);

}  // namespace ridemix
