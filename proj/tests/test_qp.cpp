// QP engine tests: pinned toy problems, duals, the independent reference
// oracle battery, infeasibility detection, and determinism.
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "ridemix/qp.hpp"

using ridemix::qp::QpProblem;
using ridemix::qp::QpResult;
using ridemix::qp::QpSettings;
using ridemix::qp::QpStatus;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace {

QpProblem scalar_problem(double quad, double lin, double lower = 0.0) {
  QpProblem p;
  p.m = 1;
  p.quad = Vec::Constant(1, quad);
  p.lin = Vec::Constant(1, lin);
  p.a_eq.resize(0, 1);
  p.b_eq.resize(0);
  p.lower = Vec::Constant(1, lower);
  return p;
}

}  // namespace

TEST_CASE("interior optimum of -(v-1)^2") {
  // maximize -(v-1)^2 = -v^2 + 2v - 1; the engine sees the first two terms.
  auto p = scalar_problem(-1.0, 2.0);
  const auto res = ridemix::qp::solve_qp(p);
  REQUIRE(res.status == QpStatus::Optimal);
  CHECK(res.primal(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-9));  // -(v-1)^2 + 1
  CHECK(res.duals_bound(0) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("equality-pinned scalar with analytically forced dual") {
  // maximize -v^2 + v subject to v = 2: gradient -2v+1 = -3 at the optimum,
  // so the equality dual must be +3 in the reported convention.
  QpProblem p = scalar_problem(-1.0, 1.0);
  Mat a(1, 1);
  a << 1.0;
  p.a_eq = a.sparseView();
  p.b_eq = Vec::Constant(1, 2.0);
  const auto res = ridemix::qp::solve_qp(p);
  REQUIRE(res.status == QpStatus::Optimal);
  CHECK(res.primal(0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(res.objective == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(res.duals_eq(0) == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("entry-cost scalar matches the grid-search reference") {
  // maximize d - d^2 - 0.2 d over d >= 0.
  const auto grid = oracles::grid_max(
      [](double d) { return d - d * d - 0.2 * d; }, 0.0, 1.0, 1e-6);
  const auto res = ridemix::qp::solve_qp(scalar_problem(-1.0, 0.8));
  REQUIRE(res.status == QpStatus::Optimal);
  CHECK(grid.arg == doctest::Approx(0.4).epsilon(1e-5));
  CHECK(grid.value == doctest::Approx(0.16).epsilon(1e-5));
  CHECK(res.primal(0) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(res.objective == doctest::Approx(0.16).epsilon(1e-9));
}

TEST_CASE("active lower bound reports a positive bound dual") {
  // maximize -v^2 - 2v over v >= 0: unconstrained argmax -1, so v* = 0 and
  // the bound multiplier equals the outward gradient 2.
  const auto res = ridemix::qp::solve_qp(scalar_problem(-1.0, -2.0));
  REQUIRE(res.status == QpStatus::Optimal);
  CHECK(res.primal(0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(res.duals_bound(0) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("free variables (lower = -inf) reach negative optima") {
  auto p = scalar_problem(-0.5, -3.0, ridemix::qp::kNegInf);
  const auto res = ridemix::qp::solve_qp(p);
  REQUIRE(res.status == QpStatus::Optimal);
  CHECK(res.primal(0) == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("structural invariants are enforced") {
  auto p = scalar_problem(0.5, 1.0);  // positive curvature: not concave
  CHECK_THROWS_AS(ridemix::qp::solve_qp(p), std::invalid_argument);

  auto q = scalar_problem(-1.0, 1.0);
  Mat a = Mat::Zero(1, 1);  // all-zero equality row
  q.a_eq = a.sparseView();
  q.b_eq = Vec::Zero(1);
  CHECK_THROWS_AS(ridemix::qp::solve_qp(q), std::invalid_argument);

  auto r = scalar_problem(-1.0, 1.0);
  r.lin.resize(2);  // dimension mismatch
  CHECK_THROWS_AS(ridemix::qp::solve_qp(r), std::invalid_argument);
}

TEST_CASE("contradictory equalities are flagged infeasible") {
  QpProblem p;
  p.m = 2;
  p.quad = Vec::Constant(2, -1.0);
  p.lin = Vec::Zero(2);
  Mat a(2, 2);
  a << 1, 1, 1, 1;
  p.a_eq = a.sparseView();
  p.b_eq = Vec(2);
  p.b_eq << 0.0, 1.0;  // v1+v2 = 0 and = 1
  p.lower = Vec::Constant(2, ridemix::qp::kNegInf);
  const auto res = ridemix::qp::solve_qp(p);
  CHECK(res.status == QpStatus::Infeasible);
}

TEST_CASE("equalities incompatible with the bounds are flagged infeasible") {
  QpProblem p;
  p.m = 2;
  p.quad = Vec::Constant(2, -1.0);
  p.lin = Vec::Zero(2);
  Mat a(1, 2);
  a << 1, 1;
  p.a_eq = a.sparseView();
  p.b_eq = Vec::Constant(1, -1.0);  // v1+v2 = -1 with v >= 0
  p.lower = Vec::Zero(2);
  const auto res = ridemix::qp::solve_qp(p);
  CHECK(res.status == QpStatus::Infeasible);
}

TEST_CASE("solution is invariant under equality row scaling") {
  std::mt19937 rng(20240915u);
  for (int trial = 0; trial < 20; ++trial) {
    QpProblem p = oracles::random_qp(rng);
    if (p.num_eq() == 0) continue;
    const auto base = ridemix::qp::solve_qp(p);
    REQUIRE(base.status == QpStatus::Optimal);

    QpProblem scaled = p;
    Mat a = Mat(p.a_eq);
    Vec b = p.b_eq;
    for (int r = 0; r < a.rows(); ++r) {
      const double f = (r % 2 == 0) ? 37.5 : 4e-3;
      a.row(r) *= f;
      b(r) *= f;
    }
    scaled.a_eq = a.sparseView();
    scaled.b_eq = b;
    const auto res = ridemix::qp::solve_qp(scaled);
    REQUIRE(res.status == QpStatus::Optimal);
    CHECK(std::abs(res.objective - base.objective) <=
          1e-7 * (1.0 + std::abs(base.objective)));
  }
}

TEST_CASE("identical inputs give bitwise-identical results") {
  std::mt19937 rng(77u);
  const QpProblem p = oracles::random_qp(rng);
  const auto a = ridemix::qp::solve_qp(p);
  const auto b = ridemix::qp::solve_qp(p);
  REQUIRE(a.status == b.status);
  CHECK(a.iterations == b.iterations);
  CHECK((a.primal - b.primal).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.duals_eq - b.duals_eq).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.objective == b.objective);
}

TEST_CASE("random battery against the projected-gradient reference") {
  std::mt19937 rng(123456789u);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const QpProblem p = oracles::random_qp(rng);
    const auto res = ridemix::qp::solve_qp(p);
    REQUIRE_MESSAGE(res.status == QpStatus::Optimal, "trial ", trial);
    ++solved;

    // Duality gap certificate.
    CHECK_MESSAGE(
        res.duality_gap <= 1e-6 * (1.0 + std::abs(res.objective)),
        "trial ", trial, " gap ", res.duality_gap);

    // Independent reference agreement.
    const auto ref = oracles::reference_qp(p);
    REQUIRE_MESSAGE(ref.converged, "reference failed on trial ", trial);
    CHECK_MESSAGE(std::abs(res.objective - ref.objective) <= 1e-5,
                  "trial ", trial, " engine ", res.objective, " reference ",
                  ref.objective);

    // Feasibility of the returned point.
    if (p.num_eq() > 0) {
      const Vec viol = p.a_eq * res.primal - p.b_eq;
      CHECK(viol.lpNorm<Eigen::Infinity>() <= 1e-6);
    }
    for (int i = 0; i < p.m; ++i) {
      CHECK(res.primal(i) >= p.lower(i) - 1e-8);
    }
  }
  CHECK(solved == 200);
}

TEST_CASE("stationarity identity links primal, duals and gradient") {
  std::mt19937 rng(4242u);
  for (int trial = 0; trial < 25; ++trial) {
    const QpProblem p = oracles::random_qp(rng);
    const auto res = ridemix::qp::solve_qp(p);
    REQUIRE(res.status == QpStatus::Optimal);
    Vec grad = 2.0 * p.quad.cwiseProduct(res.primal) + p.lin;
    Vec stat = grad + Vec(p.a_eq.transpose() * res.duals_eq) + res.duals_bound;
    CHECK(stat.lpNorm<Eigen::Infinity>() <= 1e-6);
    for (int i = 0; i < p.m; ++i) {
      CHECK(res.duals_bound(i) >= -1e-9);
      if (std::isfinite(p.lower(i))) {
        CHECK(std::abs(res.duals_bound(i) * (res.primal(i) - p.lower(i))) <=
              1e-6);
      } else {
        CHECK(res.duals_bound(i) <= 1e-9);
      }
    }
  }
}

TEST_CASE("problem dump lists dimensions and every equality entry") {
  QpProblem p = scalar_problem(-1.0, 1.0);
  Mat a(1, 1);
  a << 2.5;
  p.a_eq = a.sparseView();
  p.b_eq = Vec::Constant(1, 1.0);
  const std::string text = ridemix::qp::dump_problem(p);
  CHECK(text.find("2.5") != std::string::npos);
  CHECK(text.find("1") != std::string::npos);
}
