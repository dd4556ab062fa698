// Domain types for mixed human-driven / autonomous ride-sharing networks:
// demand patterns, economic parameters, assignment rules, and equilibrium
// candidates, together with all structural validation.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace ridemix {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ModelErrc {
  BadRowSum,             // routing row does not sum to 1
  NegativeEntry,         // routing entry < 0 (or > 1)
  NonzeroDiagonal,       // self-loop in the routing matrix
  NotStronglyConnected,  // routing graph not strongly connected
  NonPositiveTheta,      // rider mass <= 0
  TooSmall,              // fewer than two locations
  PriceOutOfRange,       // price outside [0, pbar]
  ZeroDemand,            // compensation requested at (numerically) zero demand
  RecoveryFailed,        // alternative optimum could not be mapped back
  MissingDuals,          // certificate requested without populated duals
  DimensionMismatch,     // report/scenario disagree on n
  NonConvergence,        // fixed-point iteration failed to settle
  BadParams,             // economic parameter outside its domain
};

// Single exception type for all domain errors; `code` identifies the failure
// and (i, j) carry the offending indices where meaningful (-1 otherwise).
class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrc code, const std::string& msg, int i = -1, int j = -1)
      : std::runtime_error(msg), code_(code), i_(i), j_(j) {}

  ModelErrc code() const { return code_; }
  int index_i() const { return i_; }
  int index_j() const { return j_; }

 private:
  ModelErrc code_;
  int i_, j_;
};

// ---------------------------------------------------------------------------
// Validation tolerances
// ---------------------------------------------------------------------------

struct ValidationTolerances {
  double nonneg = 1e-9;    // elementwise numerical nonnegativity (absolute)
  double row_sum = 1e-12;  // row-stochasticity of routing matrices (absolute)
};

// ---------------------------------------------------------------------------
// DemandPattern: stationary network demand (n, alpha, theta)
// ---------------------------------------------------------------------------
//
// alpha is an n-by-n matrix of routing fractions: a rider picked up at i is
// dropped off at j with probability alpha(i, j).  Every row is a probability
// distribution with zero diagonal, and the support graph (edge i->j iff
// alpha(i, j) > 0) is strongly connected.  theta_i > 0 is the mass of
// potential riders arriving at location i each period.
//
// Immutable after construction; safe to share across threads.
class DemandPattern {
 public:
  int n() const { return static_cast<int>(theta_.size()); }
  const Mat& alpha() const { return alpha_; }
  const Vec& theta() const { return theta_; }
  double theta_sum() const { return theta_.sum(); }

 private:
  friend DemandPattern validate_demand_pattern(int n, const Mat& alpha,
                                               const Vec& theta,
                                               const ValidationTolerances& tol);
  DemandPattern(Mat alpha, Vec theta)
      : alpha_(std::move(alpha)), theta_(std::move(theta)) {}

  Mat alpha_;
  Vec theta_;
};

// Validates (n, alpha, theta) and returns the immutable pattern.  Strong
// connectivity is decided by two directed reachability passes (forward and
// reverse BFS from location 0).  Throws ModelError with one of BadRowSum(i),
// NegativeEntry(i,j), NonzeroDiagonal(i), NotStronglyConnected,
// NonPositiveTheta(i), TooSmall.
DemandPattern validate_demand_pattern(int n, const Mat& alpha, const Vec& theta,
                                      const ValidationTolerances& tol = {});

// ---------------------------------------------------------------------------
// EconomicParams: (beta, omega, s, pbar) with derived relative AV cost k
// ---------------------------------------------------------------------------
//
// beta   — per-period driver survival probability, in (0, 1);
// omega  — outside-option lifetime earnings of a driver;
// s      — per-period operating cost of one AV (canonical stored field);
// pbar   — upper support of the rider willingness-to-pay distribution, which
//          is uniform on [0, pbar].
// k = s * (1 - beta)^{-1} / omega is the AV lifetime-equivalent cost relative
// to the driver outside option; it is derived, never stored, so the two
// representations cannot drift.
class EconomicParams {
 public:
  static EconomicParams from_s(double beta, double omega, double s,
                               double pbar);
  static EconomicParams from_k(double beta, double omega, double k,
                               double pbar);

  double beta() const { return beta_; }
  double omega() const { return omega_; }
  double av_cost_s() const { return s_; }
  double pbar() const { return pbar_; }
  double k() const { return s_ / ((1.0 - beta_) * omega_); }

  // True when (1-beta)*omega >= pbar and s >= pbar: both vehicle types cost
  // more than any rider is willing to pay, so the only optimum is the empty
  // market.  Flagged, not fatal.
  bool degenerate() const {
    return (1.0 - beta_) * omega_ >= pbar_ && s_ >= pbar_;
  }

  // Returns a copy with the AV cost replaced (used by k-sweeps).
  EconomicParams with_s(double s) const {
    return from_s(beta_, omega_, s, pbar_);
  }
  EconomicParams with_k(double k) const {
    return from_k(beta_, omega_, k, pbar_);
  }

 private:
  EconomicParams(double beta, double omega, double s, double pbar);

  double beta_, omega_, s_, pbar_;
};

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

// Who serves a rider when both vehicle types are available at a location.
enum class Assignment { HvPriority, AvPriority, Weighted };

// Whether the platform may mix fleets or is forced into a single type.
// ForcedHvOnly pins z == 0, r == 0; ForcedAvOnly pins x == 0, delta == 0,
// y == 0 (the corresponding variable blocks are omitted, not zero-padded).
enum class DeploymentMode { Mixed, ForcedHvOnly, ForcedAvOnly };

// Classification of a solved operating point by fleet composition.
enum class Regime { HvOnly, AvOnly, TrulyMixed };

std::string_view to_string(Assignment a);
std::string_view to_string(DeploymentMode m);
std::string_view to_string(Regime r);
Assignment parse_assignment(std::string_view s);    // "hv" | "av" | "weighted"
DeploymentMode parse_mode(std::string_view s);      // "mixed" | "hv-only" | "av-only"
Regime parse_regime(std::string_view s);            // "HvOnly" | "AvOnly" | "TrulyMixed"

// ---------------------------------------------------------------------------
// EquilibriumSolution: a full operating point of the market
// ---------------------------------------------------------------------------
//
// p      — prices per location;
// c      — driver compensations per location;
// d      — served demand d_i = theta_i * (1 - F(p_i));
// delta  — fresh driver entry per period;
// x, z   — steady-state HV / AV masses;
// y, r   — HV / AV idle relocation flows (row i = flows leaving i);
// profit — per-period platform profit sum(p.*d) - omega*sum(delta) - s*sum(z).
struct EquilibriumSolution {
  Vec p, c, d, delta, x, z;
  Mat y, r;
  double profit = 0.0;
};

// Computes profit from the fields (the stored value must match within 1e-9).
double solution_objective(const EquilibriumSolution& sol,
                          const EconomicParams& params);

// ---------------------------------------------------------------------------
// ExpectedEarnings: lifetime driver value per location
// ---------------------------------------------------------------------------

struct ExpectedEarnings {
  Vec v;            // V_i, lifetime expected earnings of a driver at i
  double max_v = 0; // max_j V_j
};

// ---------------------------------------------------------------------------
// Demand curve (uniform willingness-to-pay)
// ---------------------------------------------------------------------------

// d_i = theta_i * (1 - p_i / pbar).  Requires 0 <= p_i <= pbar; throws
// ModelError(PriceOutOfRange, i) otherwise.
Vec demand_from_price(const Vec& p, const DemandPattern& pattern,
                      const EconomicParams& params);

// Inverse of demand_from_price on d_i in [0, theta_i]: p_i = pbar*(1 - d/theta).
Vec price_from_demand(const Vec& d, const DemandPattern& pattern,
                      const EconomicParams& params);

// Revenue curve interface: location revenue as a function of served demand.
// Only the uniform distribution ships, but the solver's objective coefficients
// are funneled through this seam so another concave revenue model could be
// added without touching call sites.
class RevenueCurve {
 public:
  virtual ~RevenueCurve() = default;
  virtual double price(double d, double theta) const = 0;     // inverse demand
  virtual double value(double d, double theta) const = 0;     // p(d) * d
  virtual double marginal(double d, double theta) const = 0;  // d/dd [p(d)*d]
};

// Uniform willingness-to-pay on [0, pbar]:
//   p(d) = pbar * (1 - d/theta),  value(d) = pbar * (d - d^2/theta).
class UniformRevenue final : public RevenueCurve {
 public:
  explicit UniformRevenue(double pbar) : pbar_(pbar) {}
  double price(double d, double theta) const override {
    return pbar_ * (1.0 - d / theta);
  }
  double value(double d, double theta) const override {
    return pbar_ * (d - d * d / theta);
  }
  double marginal(double d, double theta) const override {
    return pbar_ * (1.0 - 2.0 * d / theta);
  }

 private:
  double pbar_;
};

}  // namespace ridemix
