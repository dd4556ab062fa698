// Forward discrete-time fleet dynamics.  One synchronous step matches riders
// to vehicles under the chosen assignment rule, advects served vehicles along
// the routing matrix, distributes idle vehicles according to an explicit
// relocation policy, thins drivers by the survival rate and replenishes them
// with exogenous entry.  Used to confirm that solved operating points are
// fixed points and to watch convergence from perturbed states.
#pragma once

#include <vector>

#include "ridemix/model.hpp"

namespace ridemix {

// Per-period fleet masses (elementwise >= 0).
struct FleetState {
  Vec x;  // HV mass per location
  Vec z;  // AV mass per location
};

// Destination splits for idle vehicles: row i of each matrix is the
// distribution over destinations for idle vehicles currently at i.  Rows are
// probability vectors (sum to 1 within 1e-12, entries >= 0).
struct RelocationPolicy {
  Mat y_weights;  // idle HVs
  Mat r_weights;  // idle AVs
};

// Throws ModelError(NegativeEntry / BadRowSum / DimensionMismatch) if the
// policy is not a pair of n-by-n row-stochastic matrices.
void validate_relocation_policy(const RelocationPolicy& policy, int n,
                                double row_tol = 1e-12);

// Every row uniform over all n destinations (staying put is allowed).
RelocationPolicy uniform_policy(int n);

// Normalizes the rows of equilibrium relocation matrices into a policy;
// rows with zero total fall back to uniform (they carry no mass, so the
// choice does not affect the dynamics).
RelocationPolicy induced_policy(const Mat& y, const Mat& r);

// One synchronous update.  Demand is derived from the posted prices; masses
// obey sum(x+) = beta*sum(x) + sum(delta) and sum(z+) = sum(z) exactly.
FleetState step(const FleetState& state, const Vec& p, const Vec& delta,
                const RelocationPolicy& policy, const DemandPattern& pattern,
                const EconomicParams& params, Assignment assignment);

// One trajectory sample, recorded after each executed step.
struct TrajectoryPoint {
  int step = 0;
  double sum_x = 0.0;
  double sum_z = 0.0;
  double max_state_delta = 0.0;  // sup-norm change of (x, z) in this step
};

struct IterationResult {
  FleetState state;
  bool converged = false;
  int steps = 0;  // steps actually executed
  std::vector<TrajectoryPoint> trajectory;
};

// Repeats step until the sup-norm state change drops below tol or max_steps
// is exhausted; converged=false is a valid outcome.
IterationResult iterate_to_fixed_point(const FleetState& initial, const Vec& p,
                                       const Vec& delta,
                                       const RelocationPolicy& policy,
                                       const DemandPattern& pattern,
                                       const EconomicParams& params,
                                       Assignment assignment, int max_steps,
                                       double tol);

}  // namespace ridemix
