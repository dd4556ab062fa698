// Profit-maximizing equilibrium solver.  Each (assignment, deployment mode)
// pair has an exact convex reformulation of the platform's problem; this
// module builds that program, hands it to the QP engine, maps the optimizer
// back to a full market operating point (prices, compensations, fleets,
// relocation flows), and certifies the result three independent ways:
// fixed-point residuals of the literal equilibrium equations, driver
// expected-earnings consistency, and first-order optimality conditions
// evaluated from the equality duals alone.
#pragma once

#include "ridemix/model.hpp"
#include "ridemix/qp.hpp"

namespace ridemix {

// ---------------------------------------------------------------------------
// Variable and row layout of one convex build
// ---------------------------------------------------------------------------
//
// Block offsets into the stacked decision vector; -1 marks a block that is
// not part of the formulation (forced modes drop whole blocks rather than
// pinning them to zero).  y and r are n*n blocks stored row-major:
// entry (i, j) = flow leaving i toward j.  The mixed-mode solver additionally
// carries a service-split block xa (rides served by HVs per location, so
// d - xa rides go to AVs) and its demand-cap slack s; both stay -1 in the
// three classic single-layer builds.
struct IndexMap {
  int n = 0;
  int d0 = -1, delta0 = -1, x0 = -1, z0 = -1;  // length-n blocks
  int xa0 = -1, s0 = -1;                       // length-n blocks (split form)
  int y0 = -1, r0 = -1;                        // length n*n blocks
  int total = 0;

  bool has_delta() const { return delta0 >= 0; }
  bool has_x() const { return x0 >= 0; }
  bool has_z() const { return z0 >= 0; }
  bool has_xa() const { return xa0 >= 0; }
  bool has_y() const { return y0 >= 0; }
  bool has_r() const { return r0 >= 0; }

  int d(int i) const { return d0 + i; }
  int delta(int i) const { return delta0 + i; }
  int x(int i) const { return x0 + i; }
  int z(int i) const { return z0 + i; }
  int xa(int i) const { return xa0 + i; }
  int s(int i) const { return s0 + i; }
  int y(int i, int j) const { return y0 + i * n + j; }
  int r(int i, int j) const { return r0 + i * n + j; }
};

// A fully assembled convex program plus the metadata needed to interpret its
// solution.  Rows come in per-location families, identified by the
// multiplier that lives on them:
//   fleet row i   — steady-state HV fleet balance at i          (lambda_i)
//   av row i      — steady-state AV fleet balance at i          (mu_i)
//   reloc row i   — idle-capacity / relocation conservation at i (gamma_i)
// The service-split form used by the mixed-mode solver adds two more:
//   hv idle row i — HV idle capacity feeds HV relocation
//   cap row i     — served split cannot exceed demand (slack s)
// A family absent from the formulation has offset -1.
struct ProblemBuild {
  Assignment assignment = Assignment::HvPriority;
  DeploymentMode mode = DeploymentMode::Mixed;
  IndexMap idx;
  int row_fleet0 = -1;
  int row_av0 = -1;
  int row_reloc0 = -1;
  int row_hv_idle0 = -1;
  int row_cap0 = -1;
  qp::QpProblem qp;
};

// Assembles the convex reformulation for the given assignment rule and
// deployment mode.  All variables are lower-bounded by zero; the objective is
// concave revenue minus linear fleet costs.
ProblemBuild build_alternative(const DemandPattern& pattern,
                               const EconomicParams& params,
                               Assignment assignment, DeploymentMode mode);

// Service-split form of the mixed market: a free per-location split of rides
// between the two fleets (xa to HVs, d - xa to AVs) with both relocation
// layers explicit and the split capped by demand.  Its optimum upper-bounds
// the mixed market under every assignment rule; the mixed-mode solver starts
// from it and restores the requested dispatch rule by pinning each location
// onto one of that rule's service regimes.
ProblemBuild build_split(const DemandPattern& pattern,
                         const EconomicParams& params, Assignment assignment);

// ---------------------------------------------------------------------------
// Solution recovery
// ---------------------------------------------------------------------------

// Operating-point fields recovered from a convex optimizer (all entries
// clamped to be nonnegative; absent blocks are zero-filled).
struct RecoveredFlows {
  Vec d, delta, x, z;
  Mat y, r;
};

// Maps the optimizer of a build back to relocation flows of the original
// market.  The reformulations merge the two relocation layers into one, so
// this step splits the merged flow back into HV traffic y and AV traffic r;
// the split is case analysis for the priority rules and a proportional
// transportation fill for the weighted rule.  Throws
// ModelError(RecoveryFailed) when the optimizer lies outside every case (this
// does not happen at true optima, only on garbage inputs).
RecoveredFlows recover_flows(const ProblemBuild& build, const Vec& primal,
                             const DemandPattern& pattern,
                             const EconomicParams& params,
                             double tol_scale = 1e-7);

// Per-ride driver compensation that makes lifetime HV earnings equal the
// outside option omega at every location drivers actually occupy.  Throws
// ModelError(ZeroDemand, i) if a positive fleet faces numerically zero
// demand at i.
Vec compute_compensations(const RecoveredFlows& flows,
                          const EconomicParams& params, Assignment assignment);

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

// Served-demand split: u_j = HV rides originating at j, v_j = AV rides, under
// the given assignment rule (0/0 reads as zero service).
void serve_split(Assignment assignment, const Vec& d, const Vec& x,
                 const Vec& z, Vec& u, Vec& v);

// Sup-norm residual of the literal steady-state equations of the market (the
// min/max forms, not the convexified ones) at the recovered operating point.
double equilibrium_residual(const RecoveredFlows& flows,
                            const DemandPattern& pattern,
                            const EconomicParams& params,
                            Assignment assignment);

// Value iteration for lifetime driver earnings V_i under the recovered
// operating point and compensation vector.  Converges geometrically at rate
// beta; iterates to sup-norm change below `tol`.
ExpectedEarnings expected_earnings(const RecoveredFlows& flows, const Vec& c,
                                   const DemandPattern& pattern,
                                   const EconomicParams& params,
                                   Assignment assignment, double tol = 1e-12);

// max_i |V_i - omega| over locations where HV drivers are actually present
// (positive entry or positive incoming relocation); zero when no such
// location exists.
double earnings_residual(const ExpectedEarnings& earnings,
                         const RecoveredFlows& flows,
                         const EconomicParams& params);

// Worst violation of the first-order optimality system for the build,
// evaluated from the equality-row duals only: for every variable coordinate
// with reduced gradient g and value v, both max(g, 0) and the normalized
// complementarity |v * g| / (1 + |v|) must vanish.  Throws
// ModelError(MissingDuals) when the result carries no usable duals.
double kkt_max_violation(const ProblemBuild& build, const qp::QpResult& qpres,
                         const DemandPattern& pattern,
                         const EconomicParams& params);

// Fleet-composition classification with tolerance 1e-6 * sum(theta): HvOnly
// if the AV fleet is numerically absent, AvOnly if the HV fleet is, else
// TrulyMixed.  (An all-zero operating point reads as HvOnly.)
Regime classify_regime(const Vec& x, const Vec& z, double theta_sum);

// ---------------------------------------------------------------------------
// End-to-end solve
// ---------------------------------------------------------------------------

struct SolverOptions {
  qp::QpSettings qp{};               // engine tolerances and iteration limits
  double recovery_tol_scale = 1e-7;  // relative slack in recovery case tests
  double earnings_tol = 1e-12;       // value-iteration stopping tolerance
};

// Everything the CLI reports for one solve.
struct SolveReport {
  EquilibriumSolution solution;
  Regime regime = Regime::HvOnly;
  double equilibrium_residual = 0.0;
  double earnings_residual = 0.0;
  double kkt_max_violation = 0.0;
};

// Report plus the raw build and engine result, for callers that need duals,
// iteration counts, or the assembled program (tests, --dump-qp).
struct SolveOutcome {
  SolveReport report;
  ProblemBuild build;
  qp::QpResult qp;
};

// Full pipeline: build, solve, recover, price, compensate, certify.  Throws
// ModelError(NonConvergence) if the engine fails to reach its tolerances.
SolveOutcome solve_equilibrium(const DemandPattern& pattern,
                               const EconomicParams& params,
                               Assignment assignment, DeploymentMode mode,
                               const SolverOptions& options = {});

}  // namespace ridemix
