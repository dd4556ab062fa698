// Equilibrium-solver tests: program structure, pinned closed forms, recovery
// cases, compensations, residual evaluators, earnings, first-order
// certificates, and the cross-assignment equal-profit property.
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ridemix/model.hpp"
#include "ridemix/solver.hpp"
#include "ridemix/star.hpp"

using ridemix::Assignment;
using ridemix::DeploymentMode;
using ridemix::EconomicParams;
using ridemix::Mat;
using ridemix::ModelErrc;
using ridemix::ModelError;
using ridemix::RecoveredFlows;
using ridemix::Regime;
using ridemix::Vec;

namespace {

ridemix::DemandPattern complete3() {
  return ridemix::build_star_to_complete(ridemix::StarCompleteSpec{3, 1.0});
}

ridemix::DemandPattern star3(double xi) {
  return ridemix::build_star_to_complete(ridemix::StarCompleteSpec{3, xi});
}

EconomicParams params_k(double beta, double k) {
  return EconomicParams::from_k(beta, 1.0, k, 1.0);
}

}  // namespace

TEST_CASE("hv-priority mixed build has blocks d, delta, x, z, r") {
  const auto build = ridemix::build_alternative(
      complete3(), params_k(0.8, 0.9), Assignment::HvPriority,
      DeploymentMode::Mixed);
  const auto& idx = build.idx;
  CHECK(idx.n == 3);
  CHECK(idx.has_delta());
  CHECK(idx.has_x());
  CHECK(idx.has_z());
  CHECK(idx.has_r());
  CHECK_FALSE(idx.has_y());
  CHECK(idx.total == 3 + 3 + 3 + 3 + 9);
  CHECK(build.qp.num_eq() == 9);
  CHECK(build.row_fleet0 == 0);
  CHECK(build.row_av0 == 3);
  CHECK(build.row_reloc0 == 6);
}

TEST_CASE("av-priority mixed build keeps the autonomous-stationarity rows") {
  const auto pattern = complete3();
  const auto build = ridemix::build_alternative(
      pattern, params_k(0.8, 0.9), Assignment::AvPriority,
      DeploymentMode::Mixed);
  const auto& idx = build.idx;
  CHECK(idx.has_y());
  CHECK_FALSE(idx.has_r());
  CHECK(idx.total == 12 + 9);

  // The av rows read z_i - sum_j alpha_ji z_j = 0.
  const Mat a = Mat(build.qp.a_eq);
  for (int i = 0; i < 3; ++i) {
    const int row = build.row_av0 + i;
    CHECK(a(row, idx.z(i)) == doctest::Approx(1.0));
    for (int j = 0; j < 3; ++j) {
      if (j == i) continue;
      CHECK(a(row, idx.z(j)) ==
            doctest::Approx(-pattern.alpha()(j, i)).epsilon(1e-14));
    }
    CHECK(build.qp.b_eq(row) == 0.0);
  }
}

TEST_CASE("weighted mixed build on two locations carries both flow blocks") {
  const auto pattern = ridemix::validate_demand_pattern(
      2, (Mat(2, 2) << 0, 1, 1, 0).finished(), Vec::Ones(2));
  const auto build = ridemix::build_alternative(
      pattern, params_k(0.8, 0.9), Assignment::Weighted,
      DeploymentMode::Mixed);
  CHECK(build.idx.has_y());
  CHECK(build.idx.has_r());
  CHECK(build.idx.total == 2 + 2 + 2 + 2 + 4 + 4);
  CHECK(build.qp.num_eq() == 6);
}

TEST_CASE("forced modes omit whole blocks") {
  const auto hv = ridemix::build_alternative(complete3(), params_k(0.8, 0.9),
                                             Assignment::HvPriority,
                                             DeploymentMode::ForcedHvOnly);
  CHECK_FALSE(hv.idx.has_z());
  CHECK_FALSE(hv.idx.has_r());
  CHECK(hv.idx.has_y());
  CHECK(hv.row_av0 == -1);
  CHECK(hv.idx.total == 3 + 3 + 3 + 9);

  const auto av = ridemix::build_alternative(complete3(), params_k(0.8, 0.9),
                                             Assignment::AvPriority,
                                             DeploymentMode::ForcedAvOnly);
  CHECK_FALSE(av.idx.has_x());
  CHECK_FALSE(av.idx.has_delta());
  CHECK_FALSE(av.idx.has_y());
  CHECK(av.row_fleet0 == -1);
  CHECK(av.idx.total == 3 + 3 + 9);
}

TEST_CASE("forced hv-only on the complete network matches the grid oracle") {
  // By symmetry the problem decouples per location: maximize
  // p(1-p) - omega(1-beta)(1-p) over the posted price p.
  const auto grid = oracles::grid_max(
      [](double p) { return p * (1 - p) - 0.2 * (1 - p); }, 0.0, 1.0, 1e-6);
  CHECK(grid.arg == doctest::Approx(0.6).epsilon(1e-5));

  const auto outcome = ridemix::solve_equilibrium(
      complete3(), EconomicParams::from_s(0.8, 1.0, 0.1, 1.0),
      Assignment::HvPriority, DeploymentMode::ForcedHvOnly);
  const auto& sol = outcome.report.solution;
  for (int i = 0; i < 3; ++i)
    CHECK(sol.p(i) == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(sol.profit == doctest::Approx(3.0 * grid.value).epsilon(1e-6));
  CHECK(sol.profit == doctest::Approx(0.48).epsilon(1e-6));
  CHECK(outcome.report.regime == Regime::HvOnly);
  // Driver pay at full utilization is the flow outside-option rate.
  for (int i = 0; i < 3; ++i)
    CHECK(sol.c(i) == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("forced av-only on the complete network matches the grid oracle") {
  const auto grid = oracles::grid_max(
      [](double p) { return p * (1 - p) - 0.1 * (1 - p); }, 0.0, 1.0, 1e-6);
  CHECK(grid.arg == doctest::Approx(0.55).epsilon(1e-5));

  const auto outcome = ridemix::solve_equilibrium(
      complete3(), EconomicParams::from_s(0.8, 1.0, 0.1, 1.0),
      Assignment::AvPriority, DeploymentMode::ForcedAvOnly);
  const auto& sol = outcome.report.solution;
  for (int i = 0; i < 3; ++i)
    CHECK(sol.p(i) == doctest::Approx(0.55).epsilon(1e-6));
  CHECK(sol.profit == doctest::Approx(3.0 * grid.value).epsilon(1e-6));
  CHECK(sol.profit == doctest::Approx(0.6075).epsilon(1e-6));
  CHECK(outcome.report.regime == Regime::AvOnly);
}

TEST_CASE("expensive autonomy is never deployed") {
  // k = 1.2 > 1: autonomous vehicles cost more than drivers end to end.
  for (auto a : {Assignment::HvPriority, Assignment::AvPriority,
                 Assignment::Weighted}) {
    const auto outcome = ridemix::solve_equilibrium(
        star3(0.2), params_k(0.8, 1.2), a, DeploymentMode::Mixed);
    CHECK(outcome.report.regime == Regime::HvOnly);
    CHECK(outcome.report.solution.z.lpNorm<Eigen::Infinity>() <= 1e-6 * 3);
  }
}

TEST_CASE("profit equals the engine objective and certificates hold") {
  const auto outcome = ridemix::solve_equilibrium(
      star3(0.2), params_k(0.8, 0.91), Assignment::HvPriority,
      DeploymentMode::Mixed);
  CHECK(std::abs(outcome.report.solution.profit - outcome.qp.objective) <=
        1e-8);
  CHECK(outcome.report.equilibrium_residual <= 1e-6);
  CHECK(outcome.report.earnings_residual <= 1e-6);
  CHECK(outcome.report.kkt_max_violation <= 1e-6);
  CHECK(outcome.report.regime == Regime::TrulyMixed);
}

TEST_CASE("pure flat equilibria recover with no relocation at all") {
  // Complete network, symmetric: service exactly absorbs the fleet at every
  // location, so both relocation matrices must vanish.
  for (auto a : {Assignment::HvPriority, Assignment::AvPriority,
                 Assignment::Weighted}) {
    const auto outcome = ridemix::solve_equilibrium(
        complete3(), params_k(0.8, 2.0), a, DeploymentMode::Mixed);
    const auto& sol = outcome.report.solution;
    CHECK(sol.y.lpNorm<Eigen::Infinity>() <= 1e-7);
    CHECK(sol.r.lpNorm<Eigen::Infinity>() <= 1e-7);
    CHECK((sol.d - sol.x).lpNorm<Eigen::Infinity>() <= 1e-7);
  }
}

TEST_CASE("near-star networks circulate idle drivers through the hub") {
  // xi below the branch cutoff: the pure-driver optimum holds surplus
  // drivers at the hub and relocates them outward, so x exceeds demand at
  // the hub and the driver relocation matrix is active while the autonomous
  // one stays empty.
  const auto outcome = ridemix::solve_equilibrium(
      star3(0.02), params_k(0.8, 2.0), Assignment::HvPriority,
      DeploymentMode::Mixed);
  const auto& sol = outcome.report.solution;
  CHECK(outcome.report.regime == Regime::HvOnly);
  CHECK(sol.x(0) > sol.d(0) + 1e-4);
  CHECK(sol.y.row(0).sum() > 1e-4);
  CHECK(sol.r.lpNorm<Eigen::Infinity>() <= 1e-7);
  CHECK(outcome.report.equilibrium_residual <= 1e-6);
  CHECK(outcome.report.earnings_residual <= 1e-6);
}

TEST_CASE("autonomous-priority pure-AV recovery swaps the flow blocks") {
  const auto outcome = ridemix::solve_equilibrium(
      star3(0.2), params_k(0.8, 0.5), Assignment::AvPriority,
      DeploymentMode::Mixed);
  const auto& sol = outcome.report.solution;
  CHECK(outcome.report.regime == Regime::AvOnly);
  CHECK(sol.y.lpNorm<Eigen::Infinity>() <= 1e-7);
  // Star demand is lopsided, so the empty-vehicle return flow is real.
  CHECK(sol.r.sum() > 1e-3);
  CHECK(outcome.report.equilibrium_residual <= 1e-6);
}

TEST_CASE("recovery refuses primal points outside every case") {
  const auto pattern = ridemix::validate_demand_pattern(
      2, (Mat(2, 2) << 0, 1, 1, 0).finished(), Vec::Ones(2));
  const auto build = ridemix::build_alternative(
      pattern, params_k(0.8, 0.9), Assignment::HvPriority,
      DeploymentMode::Mixed);
  Vec bad = Vec::Zero(build.idx.total);
  bad(build.idx.d(0)) = 0.5;
  bad(build.idx.d(1)) = 0.2;
  bad(build.idx.x(0)) = 0.2;
  bad(build.idx.x(1)) = 0.5;
  bad(build.idx.z(0)) = 0.3;
  bad(build.idx.z(1)) = 0.3;
  try {
    ridemix::recover_flows(build, bad, pattern, params_k(0.8, 0.9));
    FAIL("expected a throw");
  } catch (const ModelError& e) {
    CHECK(e.code() == ModelErrc::RecoveryFailed);
  }
}

TEST_CASE("compensation formulas by branch") {
  const auto params = EconomicParams::from_s(0.8, 1.0, 0.1, 1.0);
  RecoveredFlows flows;
  flows.d = Vec::Constant(2, 0.4);
  flows.delta = Vec::Zero(2);
  flows.x = Vec::Constant(2, 0.4);
  flows.z = Vec::Zero(2);
  flows.y = Mat::Zero(2, 2);
  flows.r = Mat::Zero(2, 2);

  SUBCASE("drivers fully utilized earn the flow outside option") {
    const Vec c =
        ridemix::compute_compensations(flows, params, Assignment::HvPriority);
    CHECK(c(0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(c(1) == doctest::Approx(0.2).epsilon(1e-14));
  }
  SUBCASE("surplus drivers need proportionally larger pay") {
    flows.x = Vec::Constant(2, 0.8);  // x = 2d
    const Vec c =
        ridemix::compute_compensations(flows, params, Assignment::HvPriority);
    CHECK(c(0) == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("weighted full utilization is flat") {
    flows.x = Vec::Constant(2, 0.25);
    flows.z = Vec::Constant(2, 0.15);  // x + z = d
    const Vec c =
        ridemix::compute_compensations(flows, params, Assignment::Weighted);
    CHECK(c(0) == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("zero demand under live fleet raises") {
    flows.d = Vec::Zero(2);
    flows.x = Vec::Constant(2, 0.5);
    try {
      ridemix::compute_compensations(flows, params, Assignment::HvPriority);
      FAIL("expected a throw");
    } catch (const ModelError& e) {
      CHECK(e.code() == ModelErrc::ZeroDemand);
    }
  }
}

TEST_CASE("steady-state residual on the symmetric closed form") {
  const auto pattern = complete3();
  const auto params = EconomicParams::from_s(0.8, 1.0, 0.1, 1.0);
  RecoveredFlows flows;
  flows.d = Vec::Constant(3, 0.4);
  flows.x = Vec::Constant(3, 0.4);
  flows.delta = Vec::Constant(3, 0.08);  // (1-beta) * x
  flows.z = Vec::Zero(3);
  flows.y = Mat::Zero(3, 3);
  flows.r = Mat::Zero(3, 3);

  CHECK(ridemix::equilibrium_residual(flows, pattern, params,
                                      Assignment::HvPriority) <= 1e-12);

  SUBCASE("a 0.01 nudge to one mass shows up at nearly full size") {
    flows.x(1) += 0.01;
    CHECK(ridemix::equilibrium_residual(flows, pattern, params,
                                        Assignment::HvPriority) >= 0.0099);
  }
  SUBCASE("the empty market is a steady state") {
    flows.d.setZero();
    flows.x.setZero();
    flows.delta.setZero();
    CHECK(ridemix::equilibrium_residual(flows, pattern, params,
                                        Assignment::HvPriority) == 0.0);
  }
}

TEST_CASE("expected earnings: flat pay at full utilization gives omega") {
  const auto pattern = complete3();
  const auto params = EconomicParams::from_s(0.8, 1.0, 0.1, 1.0);
  RecoveredFlows flows;
  flows.d = Vec::Constant(3, 0.4);
  flows.x = Vec::Constant(3, 0.4);
  flows.delta = Vec::Constant(3, 0.08);
  flows.z = Vec::Zero(3);
  flows.y = Mat::Zero(3, 3);
  flows.r = Mat::Zero(3, 3);

  const Vec flat = Vec::Constant(3, 0.2);
  const auto earn = ridemix::expected_earnings(flows, flat, pattern, params,
                                               Assignment::HvPriority);
  for (int i = 0; i < 3; ++i)
    CHECK(earn.v(i) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(earn.max_v == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ridemix::earnings_residual(earn, flows, params) <= 1e-9);

  const auto zero = ridemix::expected_earnings(flows, Vec::Zero(3), pattern,
                                               params, Assignment::HvPriority);
  CHECK(zero.v.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("expected earnings solve the two-location linear system") {
  const auto pattern = ridemix::validate_demand_pattern(
      2, (Mat(2, 2) << 0, 1, 1, 0).finished(), Vec::Ones(2));
  const auto params = EconomicParams::from_s(0.5, 1.0, 0.1, 1.0);
  RecoveredFlows flows;
  flows.d = Vec::Constant(2, 0.5);
  flows.x = Vec::Constant(2, 0.5);  // serve fraction exactly 1
  flows.delta = Vec::Constant(2, 0.25);
  flows.z = Vec::Zero(2);
  flows.y = Mat::Zero(2, 2);
  flows.r = Mat::Zero(2, 2);
  Vec c(2);
  c << 1.0, 2.0;
  // V1 = 1 + 0.5 V2, V2 = 2 + 0.5 V1  =>  V = (8/3, 10/3).
  const auto earn = ridemix::expected_earnings(flows, c, pattern, params,
                                               Assignment::HvPriority);
  CHECK(earn.v(0) == doctest::Approx(8.0 / 3.0).epsilon(1e-10));
  CHECK(earn.v(1) == doctest::Approx(10.0 / 3.0).epsilon(1e-10));
  CHECK(earn.max_v == doctest::Approx(10.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("first-order certificate needs populated duals") {
  const auto pattern = complete3();
  const auto params = params_k(0.8, 0.9);
  const auto build = ridemix::build_alternative(
      pattern, params, Assignment::HvPriority, DeploymentMode::Mixed);
  ridemix::qp::QpResult empty;
  empty.primal = Vec::Zero(build.idx.total);
  try {
    ridemix::kkt_max_violation(build, empty, pattern, params);
    FAIL("expected a throw");
  } catch (const ModelError& e) {
    CHECK(e.code() == ModelErrc::MissingDuals);
  }
}

TEST_CASE("regime classification splits on the relative fleet floor") {
  const double theta_sum = 3.0;
  const Vec zero = Vec::Zero(3);
  const Vec tiny = Vec::Constant(3, 1e-7 * 3.0 / 3.0 * 1e-0 * 1e-6);
  const Vec big = Vec::Constant(3, 0.4);
  CHECK(ridemix::classify_regime(big, zero, theta_sum) == Regime::HvOnly);
  CHECK(ridemix::classify_regime(zero, big, theta_sum) == Regime::AvOnly);
  CHECK(ridemix::classify_regime(big, big, theta_sum) == Regime::TrulyMixed);
  CHECK(ridemix::classify_regime(zero, zero, theta_sum) == Regime::HvOnly);
  CHECK(ridemix::classify_regime(big, tiny, theta_sum) == Regime::HvOnly);
}

TEST_CASE("the three assignments earn the same optimal profit") {
  for (std::uint32_t seed : {11u, 12u, 13u, 14u, 15u, 16u, 17u, 18u}) {
    const auto market = oracles::random_market(seed);
    double profits[3];
    int idx = 0;
    for (auto a : {Assignment::HvPriority, Assignment::AvPriority,
                   Assignment::Weighted}) {
      const auto outcome = ridemix::solve_equilibrium(
          market.pattern, market.params, a, DeploymentMode::Mixed);
      profits[idx++] = outcome.report.solution.profit;
      CHECK(outcome.report.equilibrium_residual <= 1e-6);
      CHECK(outcome.report.earnings_residual <= 1e-6);
      CHECK(outcome.report.kkt_max_violation <= 1e-6);
    }
    const double scale = 1.0 + std::abs(profits[0]);
    CHECK(std::abs(profits[0] - profits[1]) <= 1e-6 * scale);
    CHECK(std::abs(profits[0] - profits[2]) <= 1e-6 * scale);
    CHECK(std::abs(profits[1] - profits[2]) <= 1e-6 * scale);
  }
}

TEST_CASE("dispatch priority can cost the platform at rare markets") {
  // At this market the profit ceiling over all service splits is reachable
  // only when human drivers take priority.  Under av-priority the split that
  // would match the ceiling leaves two locations fully automated, and any
  // driver who keeps working eventually lands there, where a period earns
  // nothing, so entry dries up; the best driver-rational operating point
  // keeps every AV busy and earns strictly less.  Weighted dispatch is
  // capped the same way and lands a touch lower still.
  const auto market = oracles::random_market(53);
  double profit[3];
  int idx = 0;
  for (auto a : {Assignment::HvPriority, Assignment::AvPriority,
                 Assignment::Weighted}) {
    const auto outcome = ridemix::solve_equilibrium(
        market.pattern, market.params, a, DeploymentMode::Mixed);
    CHECK(outcome.report.equilibrium_residual <= 1e-8);
    CHECK(outcome.report.earnings_residual <= 1e-8);
    CHECK(outcome.report.kkt_max_violation <= 1e-6);
    profit[idx++] = outcome.report.solution.profit;
  }
  CHECK(profit[0] == doctest::Approx(0.7032473413).epsilon(1e-7));
  CHECK(profit[1] == doctest::Approx(0.7009517585).epsilon(1e-7));
  CHECK(profit[2] == doctest::Approx(0.7009478274).epsilon(1e-7));
  CHECK(profit[0] - profit[1] > 1e-3);
  CHECK(profit[1] - profit[2] > 1e-6);
}

TEST_CASE("free mixing beats both forced deployments") {
  for (std::uint32_t seed : {21u, 22u, 23u, 24u}) {
    const auto market = oracles::random_market(seed);
    const double mixed =
        ridemix::solve_equilibrium(market.pattern, market.params,
                                   Assignment::HvPriority,
                                   DeploymentMode::Mixed)
            .report.solution.profit;
    const double hv =
        ridemix::solve_equilibrium(market.pattern, market.params,
                                   Assignment::HvPriority,
                                   DeploymentMode::ForcedHvOnly)
            .report.solution.profit;
    const double av =
        ridemix::solve_equilibrium(market.pattern, market.params,
                                   Assignment::AvPriority,
                                   DeploymentMode::ForcedAvOnly)
            .report.solution.profit;
    CHECK(mixed >= hv - 1e-8);
    CHECK(mixed >= av - 1e-8);
  }
}

TEST_CASE("no-coexistence zero patterns at truly mixed optima") {
  const auto pattern = star3(0.2);
  const auto params = params_k(0.8, 0.91);

  const auto hv = ridemix::solve_equilibrium(
      pattern, params, Assignment::HvPriority, DeploymentMode::Mixed);
  REQUIRE(hv.report.regime == Regime::TrulyMixed);
  CHECK(hv.report.solution.r.lpNorm<Eigen::Infinity>() <= 1e-6);

  const auto av = ridemix::solve_equilibrium(
      pattern, params, Assignment::AvPriority, DeploymentMode::Mixed);
  CHECK(av.report.solution.y.lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("driver relocation is one-sided at optimum") {
  // Wherever relocation leaves a location, none may enter it.
  for (std::uint32_t seed : {31u, 32u, 33u}) {
    const auto market = oracles::random_market(seed);
    const auto outcome = ridemix::solve_equilibrium(
        market.pattern, market.params, Assignment::HvPriority,
        DeploymentMode::Mixed);
    const Mat& r = outcome.report.solution.r;
    const int n = market.pattern.n();
    for (int i = 0; i < n; ++i) {
      if (r.row(i).maxCoeff() > 1e-6) {
        CHECK(r.col(i).sum() <= 1e-6);
      }
    }
  }
}

TEST_CASE("mass scaling moves quantities linearly and leaves prices fixed") {
  const auto market = oracles::random_market(41u);
  const double lam = 2.7;
  const auto scaled_pattern = ridemix::validate_demand_pattern(
      market.pattern.n(), market.pattern.alpha(),
      Vec(lam * market.pattern.theta()));

  const auto base = ridemix::solve_equilibrium(market.pattern, market.params,
                                               Assignment::HvPriority,
                                               DeploymentMode::Mixed);
  const auto scaled = ridemix::solve_equilibrium(scaled_pattern, market.params,
                                                 Assignment::HvPriority,
                                                 DeploymentMode::Mixed);
  const double tol = 1e-6 * (1.0 + std::abs(base.report.solution.profit));
  CHECK(std::abs(scaled.report.solution.profit -
                 lam * base.report.solution.profit) <= lam * tol);
  CHECK((scaled.report.solution.p - base.report.solution.p)
            .lpNorm<Eigen::Infinity>() <= 1e-5);
  CHECK((scaled.report.solution.x - lam * base.report.solution.x)
            .lpNorm<Eigen::Infinity>() <= 1e-5 * lam);
  CHECK((scaled.report.solution.z - lam * base.report.solution.z)
            .lpNorm<Eigen::Infinity>() <= 1e-5 * lam);
}

TEST_CASE("serve split by assignment rule") {
  Vec d(2), x(2), z(2), u, v;
  d << 0.6, 0.3;
  x << 0.4, 0.4;
  z << 0.5, 0.0;

  ridemix::serve_split(Assignment::HvPriority, d, x, z, u, v);
  CHECK(u(0) == doctest::Approx(0.4));  // drivers first
  CHECK(v(0) == doctest::Approx(0.2));  // overflow to autonomy
  CHECK(u(1) == doctest::Approx(0.3));
  CHECK(v(1) == doctest::Approx(0.0));

  ridemix::serve_split(Assignment::AvPriority, d, x, z, u, v);
  CHECK(v(0) == doctest::Approx(0.5));
  CHECK(u(0) == doctest::Approx(0.1));
  CHECK(v(1) == doctest::Approx(0.0));
  CHECK(u(1) == doctest::Approx(0.3));

  ridemix::serve_split(Assignment::Weighted, d, x, z, u, v);
  // fleet 0.9 > d 0.6: each class serves its proportional share.
  CHECK(u(0) == doctest::Approx(0.6 * 0.4 / 0.9));
  CHECK(v(0) == doctest::Approx(0.6 * 0.5 / 0.9));
  CHECK(u(1) == doctest::Approx(0.3));
  CHECK(v(1) == doctest::Approx(0.0));
}
