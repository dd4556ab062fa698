#include "ridemix/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ridemix::qp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

void validate(const QpProblem& p) {
  if (p.m <= 0 || p.quad.size() != p.m || p.lin.size() != p.m ||
      p.lower.size() != p.m) {
    throw std::invalid_argument("qp: inconsistent variable dimensions");
  }
  if (p.a_eq.cols() != p.m || p.b_eq.size() != p.a_eq.rows()) {
    throw std::invalid_argument("qp: inconsistent constraint dimensions");
  }
  for (int j = 0; j < p.m; ++j) {
    if (p.quad(j) > 1e-14) {
      throw std::invalid_argument("qp: quad coefficients must be <= 0");
    }
  }
  // No all-zero equality rows (they are either vacuous or inconsistent and
  // poison the row equilibration).
  const Eigen::MatrixXd a = Eigen::MatrixXd(p.a_eq);
  for (int i = 0; i < a.rows(); ++i) {
    if (a.row(i).cwiseAbs().maxCoeff() == 0.0) {
      throw std::invalid_argument("qp: equality row " + std::to_string(i) +
                                  " is all zero");
    }
  }
}

// Work data in the internal minimization convention:
//   minimize 1/2 v' P v + q' v,  P = diag(pdiag) with pdiag = -2*quad >= 0.
struct Work {
  int m = 0;
  int k = 0;
  // Original (unscaled) data.
  Vec p0, q0, b0, lower;
  Eigen::MatrixXd a0;
  // Ruiz-equilibrated data.
  Vec ps, qs, bs, lbs;
  Eigen::MatrixXd as;
  Vec dscale, escale;  // v = dscale .* v_scaled; rows scaled by escale
  double cscale = 1.0;
};

void ruiz_equilibrate(Work& w, int iters) {
  const int m = w.m, k = w.k;
  w.dscale = Vec::Ones(m);
  w.escale = Vec::Ones(k);
  w.cscale = 1.0;
  w.ps = w.p0;
  w.qs = w.q0;
  w.bs = w.b0;
  w.as = w.a0;
  for (int it = 0; it < iters; ++it) {
    // Column norms over the stacked [P; A].
    for (int j = 0; j < m; ++j) {
      double nj = std::abs(w.ps(j));
      for (int i = 0; i < k; ++i) nj = std::max(nj, std::abs(w.as(i, j)));
      double dj = (nj < 1e-10) ? 1.0 : 1.0 / std::sqrt(nj);
      dj = std::clamp(dj, 1e-4, 1e4);
      w.ps(j) *= dj * dj;
      w.qs(j) *= dj;
      for (int i = 0; i < k; ++i) w.as(i, j) *= dj;
      w.dscale(j) *= dj;
    }
    // Row norms of A.
    for (int i = 0; i < k; ++i) {
      double ri = 0.0;
      for (int j = 0; j < m; ++j) ri = std::max(ri, std::abs(w.as(i, j)));
      double ei = (ri < 1e-10) ? 1.0 : 1.0 / std::sqrt(ri);
      ei = std::clamp(ei, 1e-4, 1e4);
      for (int j = 0; j < m; ++j) w.as(i, j) *= ei;
      w.bs(i) *= ei;
      w.escale(i) *= ei;
    }
  }
  // Cost scaling keeps the objective terms O(1).
  const double pmean = (m > 0) ? w.ps.sum() / m : 0.0;
  double cn = std::max(pmean, inf_norm(w.qs));
  if (cn > 1e-10) {
    w.cscale = 1.0 / cn;
    w.ps *= w.cscale;
    w.qs *= w.cscale;
  }
  // Scaled lower bounds (dscale > 0 keeps orientation).
  w.lbs = Vec(m);
  for (int j = 0; j < m; ++j) {
    w.lbs(j) = std::isinf(w.lower(j)) ? kNegInf : w.lower(j) / w.dscale(j);
  }
}

struct Residuals {
  double prim = kInf;
  double dual = kInf;
};

// Unscaled KKT residuals at (v, y_eq, y_bd) in the minimization convention.
Residuals residuals_at(const Work& w, const Vec& v, const Vec& yeq,
                       const Vec& ybd) {
  Residuals r;
  double rp = 0.0;
  if (w.k > 0) rp = inf_norm(w.a0 * v - w.b0);
  for (int j = 0; j < w.m; ++j) {
    if (!std::isinf(w.lower(j))) rp = std::max(rp, w.lower(j) - v(j));
  }
  r.prim = rp;
  Vec station = w.p0.cwiseProduct(v) + w.q0 + ybd;
  if (w.k > 0) station += w.a0.transpose() * yeq;
  r.dual = inf_norm(station);
  return r;
}

// Lagrangian dual value in the minimization convention; used for the gap.
double dual_value(const Work& w, const Vec& yeq, const Vec& ybd) {
  double val = 0.0;
  Vec s = -ybd;  // multipliers for v >= lower, s >= 0
  Vec t = w.q0 - s;
  if (w.k > 0) {
    t += w.a0.transpose() * yeq;
    val -= w.b0.dot(yeq);
  }
  for (int j = 0; j < w.m; ++j) {
    if (w.p0(j) > 1e-14) val -= 0.5 * t(j) * t(j) / w.p0(j);
    if (!std::isinf(w.lower(j))) val += w.lower(j) * s(j);
  }
  return val;
}

struct PolishOutcome {
  bool ok = false;
  Vec v, yeq, ybd;
  Residuals res;
};

// Exact refinement of a near-solution by a primal active-set pass on the
// original-scale data.  The point is first clipped to the bounds and
// projected back onto the equalities, then each round solves for the
// minimizer over the current working set and walks toward it, stopping at
// the first blocking bound (single add) or, once the subproblem minimizer
// is reached, releasing the lowest-index wrong-sign bound multiplier
// (single drop, Bland's rule).  Feasible iterates plus one-change moves
// keep the pass from cycling on degenerate problems whose cost is flat
// along a face; a vanishing proximal term keeps every direction system
// nonsingular there, and bound multipliers are recovered by least squares
// over the free coordinates so rank-deficient equality blocks cannot
// corrupt the sign tests.
PolishOutcome polish(const Work& w, Vec v) {
  PolishOutcome out;
  const int m = w.m;
  const int k = w.k;

  // Feasible start: alternate bound clipping with a minimum-norm equality
  // correction; the final clip leaves at most rounding-level equality drift,
  // which the per-round directions keep correcting.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> acod;
  if (k > 0) acod.compute(w.a0);
  for (int pass = 0; pass < 3; ++pass) {
    for (int j = 0; j < m; ++j) {
      if (!std::isinf(w.lower(j))) v(j) = std::max(v(j), w.lower(j));
    }
    if (k > 0 && pass < 2) v += acod.solve(w.b0 - w.a0 * v);
  }

  std::vector<char> in_set(m, 0);
  for (int j = 0; j < m; ++j) {
    if (std::isinf(w.lower(j))) continue;
    if (v(j) - w.lower(j) <= 3e-7 * (1.0 + std::abs(w.lower(j)))) {
      in_set[j] = 1;
      v(j) = w.lower(j);
    }
  }

  const double tau = 1e-10 * (1.0 + inf_norm(w.p0));
  const double reg = 1e-11;
  const int max_rounds = 3 * m + 120;
  const int dim = m + k;
  Eigen::MatrixXd kkt(dim, dim);
  Vec rhs(dim), g(m), mu(m), yeq(k);
  bool converged = false;

  auto multipliers = [&]() {
    // Least-squares equality multipliers over the free coordinates; the
    // residual they leave on free rows is the working-set optimality test,
    // and on pinned rows they define the bound multipliers.  Least squares
    // keeps the test well conditioned even when pinning makes the equality
    // block rank deficient.
    std::vector<int> free_idx;
    for (int j = 0; j < m; ++j) {
      if (!in_set[j]) free_idx.push_back(j);
    }
    Vec atl = Vec::Zero(m);
    yeq = Vec::Zero(k);
    if (k > 0 && !free_idx.empty()) {
      Eigen::MatrixXd bmat(static_cast<int>(free_idx.size()), k);
      Vec gfree(static_cast<int>(free_idx.size()));
      for (int r = 0; r < bmat.rows(); ++r) {
        for (int i = 0; i < k; ++i) bmat(r, i) = w.a0(i, free_idx[r]);
        gfree(r) = g(free_idx[r]);
      }
      yeq = bmat.completeOrthogonalDecomposition().solve(-gfree);
      atl = w.a0.transpose() * yeq;
    }
    mu = g + atl;  // pinned rows: bound multiplier; free rows: residual
    double stat = 0.0;
    for (int j : free_idx) stat = std::max(stat, std::abs(mu(j)));
    return stat;
  };

  for (int round = 0; round < max_rounds; ++round) {
    g = w.p0.cwiseProduct(v) + w.q0;
    const double gscale = 1.0 + inf_norm(g);
    const double vscale = 1.0 + inf_norm(v);
    const double stat_free = multipliers();
    const double drift_norm = (k > 0) ? inf_norm(w.b0 - w.a0 * v) : 0.0;
    bool at_subproblem_opt =
        stat_free <= 1e-12 * gscale && drift_norm <= 1e-11 * vscale;

    if (!at_subproblem_opt) {
      // Direction system: minimize the model over the working set, with the
      // current equality drift folded into the right-hand side.  A vanishing
      // proximal floor keeps the system nonsingular when the cost is flat
      // along free coordinates; the optimality test above does not rely on
      // the direction, so the floor's noise amplification is harmless.
      kkt.setZero();
      for (int j = 0; j < m; ++j) {
        kkt(j, j) = in_set[j] ? 1.0 : w.p0(j) + tau;
        rhs(j) = in_set[j] ? 0.0 : -g(j);
      }
      if (k > 0) {
        Vec drift = w.b0 - w.a0 * v;
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < m; ++j) {
            if (in_set[j]) continue;
            kkt(m + i, j) = w.a0(i, j);
            kkt(j, m + i) = w.a0(i, j);
          }
          rhs(m + i) = drift(i);
        }
      }
      Eigen::MatrixXd kkt_reg = kkt;
      for (int j = 0; j < m; ++j) kkt_reg(j, j) += reg;
      for (int i = m; i < dim; ++i) kkt_reg(i, i) -= reg;
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt_reg);
      Vec sol = lu.solve(rhs);
      for (int refine = 0; refine < 3; ++refine) {
        sol += lu.solve(rhs - kkt * sol);
      }
      if (!sol.allFinite()) return out;
      Vec p = sol.head(m);
      for (int j = 0; j < m; ++j) {
        if (in_set[j]) p(j) = 0.0;
      }
      const double pnorm = inf_norm(p);
      if (pnorm > 1e-13 * vscale) {
        // Ratio test: largest step before a free coordinate falls through
        // its bound; ties resolve to the lowest index.
        double alpha = 1.0;
        int blocker = -1;
        for (int j = 0; j < m; ++j) {
          if (in_set[j] || std::isinf(w.lower(j))) continue;
          if (p(j) >= -1e-14 * pnorm) continue;
          const double dist = std::max(v(j) - w.lower(j), 0.0);
          const double a = dist / (-p(j));
          if (a < alpha - 1e-15) {
            alpha = a;
            blocker = j;
          }
        }
        v += alpha * p;
        if (blocker >= 0) {
          in_set[blocker] = 1;
          v(blocker) = w.lower(blocker);
        }
        continue;
      }
      // Direction exhausted without reaching the test's tolerance: fall
      // through to the release logic rather than looping in place.
    }

    int drop = -1;
    const double mult_tol = 1e-9 * gscale;
    for (int j = 0; j < m; ++j) {
      if (in_set[j] && mu(j) < -mult_tol) {
        drop = j;
        break;
      }
    }
    if (drop < 0) {
      converged = true;
      break;
    }
    in_set[drop] = 0;
  }

  g = w.p0.cwiseProduct(v) + w.q0;
  multipliers();
  Vec ybd = Vec::Zero(m);
  for (int j = 0; j < m; ++j) {
    if (in_set[j]) ybd(j) = -mu(j);
  }
  out.v = v;
  out.yeq = yeq;
  out.ybd = ybd;
  out.res = residuals_at(w, v, yeq, ybd);
  out.ok = converged;
  return out;
}

}  // namespace

double qp_objective(const QpProblem& problem, const Vec& v) {
  return problem.quad.dot(v.cwiseProduct(v)) + problem.lin.dot(v);
}

namespace {
QpResult solve_qp_impl(const QpProblem& problem, const QpSettings& st,
                       bool allow_restart);
}

QpResult solve_qp(const QpProblem& problem, const QpSettings& st) {
  return solve_qp_impl(problem, st, true);
}

namespace {
QpResult solve_qp_impl(const QpProblem& problem, const QpSettings& st,
                       bool allow_restart) {
  validate(problem);

  Work w;
  w.m = problem.m;
  w.k = problem.num_eq();
  w.p0 = -2.0 * problem.quad;  // minimization Hessian diagonal, >= 0
  w.p0 = w.p0.cwiseMax(0.0);
  w.q0 = -problem.lin;
  w.a0 = Eigen::MatrixXd(problem.a_eq);
  w.b0 = problem.b_eq;
  w.lower = problem.lower;
  ruiz_equilibrate(w, st.scaling_iters);

  const int m = w.m, k = w.k;
  double rho_bd = st.rho;
  double rho_eq = 1e3 * st.rho;

  // Factorization of M = P + sigma*I + rho_eq*A'A + rho_bd*I (scaled data).
  Eigen::LLT<Eigen::MatrixXd> llt;
  auto refactor = [&]() {
    Eigen::MatrixXd mmat =
        (w.ps.array() + st.sigma + rho_bd).matrix().asDiagonal();
    if (k > 0) mmat += rho_eq * (w.as.transpose() * w.as);
    llt.compute(mmat);
  };
  refactor();

  Vec x = Vec::Zero(m);
  Vec zeq = w.bs;              // equality slacks live on {b} after projection
  Vec yeq = Vec::Zero(k);
  Vec zbd = Vec::Zero(m);
  for (int j = 0; j < m; ++j) zbd(j) = std::max(0.0, w.lbs(j));
  Vec ybd = Vec::Zero(m);

  QpResult result;
  result.primal = Vec::Zero(m);
  result.duals_eq = Vec::Zero(k);
  result.duals_bound = Vec::Zero(m);

  // Unscaled views refreshed at every check.
  Vec v(m), yequ(k), ybdu(m);
  auto unscale = [&]() {
    v = w.dscale.cwiseProduct(x);
    yequ = w.escale.cwiseProduct(yeq) / w.cscale;
    ybdu = ybd.cwiseQuotient(w.dscale) / w.cscale;
  };

  Vec yequ_prev, ybdu_prev;
  double prim_window_best = kInf;
  double ynorm_window_start = 0.0;
  double last_polish_level = kInf;
  int last_polish_iter = 0;

  auto finish_optimal = [&](const Vec& fv, const Vec& fyeq, const Vec& fybd,
                            const Residuals& res, bool polished, int iters) {
    result.status = QpStatus::Optimal;
    result.primal = fv;
    result.duals_eq = -fyeq;    // maximization convention
    result.duals_bound = (-fybd).cwiseMax(0.0);
    result.objective = qp_objective(problem, fv);
    result.primal_residual = res.prim;
    result.dual_residual = res.dual;
    result.duality_gap =
        std::abs(-result.objective - dual_value(w, fyeq, fybd));
    result.iterations = iters;
    result.polished = polished;
    return result;
  };

  const double eps_goal = std::min(st.eps_primal, st.eps_dual);

  // Degenerate problems (cost flat along a face of the feasible set) can
  // stall the splitting iteration and leave the polish without a stable
  // active-set guess.  Fallback: re-solve once with a tiny curvature floor on
  // every coordinate, which makes the optimum unique and easy to reach, then
  // run the exact-KKT polish of the *original* problem from that point.  The
  // result is only accepted if the original problem's residuals pass, so the
  // perturbation can never leak into a returned solution.
  bool restart_left = allow_restart && st.polish;
  int stall_failures = 0;
  auto try_regularized_restart = [&](int iters_spent) -> std::optional<QpResult> {
    const double eps_reg = 1e-6 * std::max(1.0, inf_norm(problem.quad));
    if (!(problem.quad.array() > -eps_reg).any()) return std::nullopt;
    QpProblem tight = problem;
    for (int j = 0; j < tight.m; ++j) {
      tight.quad(j) = std::min(tight.quad(j), -eps_reg);
    }
    QpResult sub = solve_qp_impl(tight, st, false);
    if (sub.status != QpStatus::Optimal) return std::nullopt;
    PolishOutcome po = polish(w, sub.primal);
    if (po.ok && po.res.prim <= 0.1 * eps_goal &&
        po.res.dual <= 0.1 * eps_goal) {
      return finish_optimal(po.v, po.yeq, po.ybd, po.res, true,
                            iters_spent + sub.iterations);
    }
    return std::nullopt;
  };

  int iter = 0;
  while (iter < st.max_iter) {
    ++iter;
    // (1) Linear-system step.
    Vec rhs = st.sigma * x - w.qs + (rho_bd * zbd - ybd);
    if (k > 0) rhs += w.as.transpose() * (rho_eq * zeq - yeq);
    Vec xt = llt.solve(rhs);
    // (2) Over-relaxation and projection steps.
    Vec x_old = x;
    x = st.relax_alpha * xt + (1.0 - st.relax_alpha) * x_old;
    if (k > 0) {
      Vec zteq = w.as * xt;
      Vec relax = st.relax_alpha * zteq + (1.0 - st.relax_alpha) * zeq;
      yeq += rho_eq * (relax - w.bs);
      zeq = w.bs;
    }
    {
      Vec wvec = st.relax_alpha * xt + (1.0 - st.relax_alpha) * zbd +
                 ybd / rho_bd;
      Vec znew = wvec.cwiseMax(w.lbs);
      ybd = rho_bd * (wvec - znew);
      zbd = znew;
    }

    if (iter % st.check_interval != 0 && iter != st.max_iter) continue;

    unscale();
    Residuals res = residuals_at(w, v, yequ, ybdu);

    // Terminate directly on the raw iterate.
    if (res.prim <= st.eps_primal && res.dual <= st.eps_dual) {
      if (st.polish) {
        PolishOutcome po = polish(w, v);
        if (po.ok && po.res.prim <= st.eps_primal &&
            po.res.dual <= st.eps_dual &&
            std::max(po.res.prim, po.res.dual) <=
                std::max(res.prim, res.dual)) {
          return finish_optimal(po.v, po.yeq, po.ybd, po.res, true, iter);
        }
      }
      return finish_optimal(v, yequ, ybdu, res, false, iter);
    }

    // Early polish: once the iterate is roughly converged the active set is
    // usually exact, and the direct solve lands at machine precision.  Fire
    // on clear progress, and also periodically when the iterate stalls on a
    // degenerate face (primal residual tight, dual residual wobbling).
    const double level = std::max(res.prim, res.dual);
    const bool improved = level < 0.5 * last_polish_level;
    const bool stalled = iter - last_polish_iter >=
                         4 * st.divergence_window * (1 + stall_failures);
    if (st.polish &&
        ((improved && level < 1e-3) || (stalled && level < 1e-1))) {
      last_polish_level = std::min(last_polish_level, level);
      last_polish_iter = iter;
      PolishOutcome po = polish(w, v);
      if (po.ok && po.res.prim <= 0.1 * eps_goal &&
          po.res.dual <= 0.1 * eps_goal) {
        return finish_optimal(po.v, po.yeq, po.ybd, po.res, true, iter);
      }
      if (stalled) ++stall_failures;
    }
    if (restart_left && stall_failures >= 2) {
      restart_left = false;
      last_polish_iter = iter;
      if (auto fr = try_regularized_restart(iter)) return *fr;
    }

    // Primal infeasibility certificate from the dual update direction.
    if (yequ_prev.size() == k && k > 0) {
      Vec deq = yequ - yequ_prev;
      Vec dbd = ybdu - ybdu_prev;
      double dnorm = std::max(inf_norm(deq), inf_norm(dbd));
      if (dnorm > 1e-12 * (1.0 + std::max(inf_norm(yequ), inf_norm(ybdu)))) {
        deq /= dnorm;
        dbd /= dnorm;
        double station = inf_norm(w.a0.transpose() * deq + dbd);
        double support = w.b0.dot(deq);
        bool sign_ok = true;
        for (int j = 0; j < m; ++j) {
          if (std::isinf(w.lower(j))) {
            if (std::abs(dbd(j)) > 1e-8) sign_ok = false;
          } else {
            support += w.lower(j) * dbd(j);
            if (dbd(j) > 1e-8) sign_ok = false;
          }
        }
        if (sign_ok && station <= 1e-8 && support < -1e-8) {
          result.status = QpStatus::Infeasible;
          result.primal = v;
          result.duals_eq = -yequ;
          result.duals_bound = (-ybdu).cwiseMax(0.0);
          result.objective = qp_objective(problem, v);
          result.primal_residual = res.prim;
          result.dual_residual = res.dual;
          result.iterations = iter;
          return result;
        }
      }
    }
    yequ_prev = yequ;
    ybdu_prev = ybdu;

    // Windowed divergence backstop: duals racing away while the primal
    // residual is stuck is the other signature of infeasibility.
    prim_window_best = std::min(prim_window_best, res.prim);
    if (iter % st.divergence_window == 0) {
      const double ynorm = std::max(inf_norm(yequ), inf_norm(ybdu));
      if (ynorm > 1e6 * (1.0 + ynorm_window_start) &&
          res.prim > 0.99 * prim_window_best && res.prim > st.eps_primal) {
        result.status = QpStatus::Infeasible;
        result.primal = v;
        result.primal_residual = res.prim;
        result.dual_residual = res.dual;
        result.iterations = iter;
        return result;
      }
      ynorm_window_start = ynorm;
      prim_window_best = res.prim;
    }

    // Step-size adaptation balancing the two relative residuals.
    if (iter % (st.check_interval * 10) == 0) {
      double pn = std::max({k > 0 ? inf_norm(w.a0 * v) : 0.0,
                            k > 0 ? inf_norm(w.b0) : 0.0, 1e-10});
      double dn = std::max({inf_norm(w.p0.cwiseProduct(v)),
                            k > 0 ? inf_norm(w.a0.transpose() * yequ) : 0.0,
                            inf_norm(w.q0), 1e-10});
      double ratio = std::sqrt((res.prim / pn) / std::max(res.dual / dn, 1e-16));
      ratio = std::clamp(ratio, 1e-3, 1e3);
      if (ratio > 5.0 || ratio < 0.2) {
        rho_bd = std::clamp(rho_bd * ratio, 1e-6, 1e6);
        rho_eq = 1e3 * rho_bd;
        refactor();
      }
    }
  }

  if (restart_left) {
    if (auto fr = try_regularized_restart(iter)) return *fr;
  }

  unscale();
  Residuals res = residuals_at(w, v, yequ, ybdu);
  result.status = QpStatus::MaxIterations;
  result.primal = v;
  result.duals_eq = -yequ;
  result.duals_bound = (-ybdu).cwiseMax(0.0);
  result.objective = qp_objective(problem, v);
  result.primal_residual = res.prim;
  result.dual_residual = res.dual;
  result.duality_gap = std::abs(-result.objective - dual_value(w, yequ, ybdu));
  result.iterations = st.max_iter;
  return result;
}
}  // namespace

std::string dump_problem(const QpProblem& p) {
  std::ostringstream os;
  os.precision(17);
  os << "%% qp problem: m=" << p.m << " eq_rows=" << p.num_eq() << "\n";
  os << "% quad (diagonal)\n";
  for (int j = 0; j < p.m; ++j) os << j << " " << p.quad(j) << "\n";
  os << "% lin\n";
  for (int j = 0; j < p.m; ++j) os << j << " " << p.lin(j) << "\n";
  os << "% a_eq (row col value)\n";
  for (int c = 0; c < p.a_eq.outerSize(); ++c) {
    for (SpMat::InnerIterator it(p.a_eq, c); it; ++it) {
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
    }
  }
  os << "% b_eq\n";
  for (int i = 0; i < p.num_eq(); ++i) os << i << " " << p.b_eq(i) << "\n";
  os << "% lower (-inf marked as 'free')\n";
  for (int j = 0; j < p.m; ++j) {
    os << j << " ";
    if (std::isinf(p.lower(j))) {
      os << "free\n";
    } else {
      os << p.lower(j) << "\n";
    }
  }
  return os.str();
}

}  // namespace ridemix::qp
