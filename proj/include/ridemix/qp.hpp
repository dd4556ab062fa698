// Self-contained solver for linearly-constrained concave-quadratic
// maximization with nonnegativity (lower) bounds:
//
//     maximize    sum_i quad_i * v_i^2 + lin_i * v_i      (quad_i <= 0)
//     subject to  a_eq * v = b_eq
//                 v_i >= lower_i                (lower_i = 0 or -infinity)
//
// The method is operator splitting (ADMM with over-relaxation and running
// dual estimates) on the equivalent minimization, preceded by Ruiz matrix
// equilibration and followed by an active-set polish solve that refines the
// returned point to near machine precision when it succeeds.  A single solve
// is strictly single-threaded and deterministic: the same inputs produce a
// bitwise-identical iterate sequence.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <limits>

namespace ridemix::qp {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct QpProblem {
  int m = 0;        // variable count
  Vec quad;         // length-m diagonal quadratic coefficients, quad_i <= 0
  Vec lin;          // length-m linear coefficients
  SpMat a_eq;       // k x m equality constraint matrix (no all-zero rows)
  Vec b_eq;         // length-k right-hand side
  Vec lower;        // length-m lower bounds: 0 (or any finite) or -infinity

  int num_eq() const { return static_cast<int>(a_eq.rows()); }
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

// Duals are reported in the maximization convention: at an optimum,
//
//     grad_obj(v) + a_eq^T * duals_eq + duals_bound = 0,
//
// with duals_bound >= 0 and duals_bound_i * (v_i - lower_i) = 0.  Hence for a
// variable strictly above its bound, grad_obj_i + (a_eq^T duals_eq)_i = 0.
struct QpResult {
  QpStatus status = QpStatus::MaxIterations;
  Vec primal;           // length m
  Vec duals_eq;         // length k
  Vec duals_bound;      // length m, >= 0 up to tolerance
  double objective = 0.0;
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double duality_gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool polished = false;
};

struct QpSettings {
  double eps_primal = 1e-8;
  double eps_dual = 1e-8;
  int max_iter = 200000;
  // Internal knobs; defaults are deliberately fixed so that solves are
  // reproducible across runs and machines with the same build.
  double rho = 0.1;            // initial step for bound rows (x1000 for eq rows)
  double sigma = 1e-6;         // proximal regularization
  double relax_alpha = 1.6;    // over-relaxation
  int check_interval = 25;     // residual / adaptation cadence
  int scaling_iters = 10;      // Ruiz equilibration sweeps
  int divergence_window = 1000;// infeasibility detection window
  bool polish = true;
};

// Solves the QP.  Throws std::invalid_argument when the problem violates its
// structural invariants (dimension mismatch, positive quad entries, all-zero
// equality rows).  Unbounded problems are not given a dedicated status: their
// iterates diverge and the solve ends as MaxIterations.
QpResult solve_qp(const QpProblem& problem, const QpSettings& settings = {});

// Objective sum_i quad_i v_i^2 + lin_i v_i evaluated at an arbitrary point.
double qp_objective(const QpProblem& problem, const Vec& v);

// Plain-text dump of the problem in a matrix-market-like listing (debugging
// aid behind the CLI --dump-qp flag).
std::string dump_problem(const QpProblem& problem);

}  // namespace ridemix::qp
