#include "ridemix/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ridemix/solver.hpp"  // serve_split

namespace ridemix {

void validate_relocation_policy(const RelocationPolicy& policy, int n,
                                double row_tol) {
  auto check = [&](const Mat& m, const char* which) {
    if (m.rows() != n || m.cols() != n) {
      throw ModelError(ModelErrc::DimensionMismatch,
                       std::string("relocation policy ") + which +
                           " is not n-by-n");
    }
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (m(i, j) < 0.0) {
          throw ModelError(ModelErrc::NegativeEntry,
                           std::string("relocation policy ") + which +
                               " has a negative entry",
                           i, j);
        }
        sum += m(i, j);
      }
      if (std::abs(sum - 1.0) > row_tol) {
        throw ModelError(ModelErrc::BadRowSum,
                         std::string("relocation policy ") + which +
                             " row does not sum to 1",
                         i);
      }
    }
  };
  check(policy.y_weights, "y_weights");
  check(policy.r_weights, "r_weights");
}

RelocationPolicy uniform_policy(int n) {
  RelocationPolicy p;
  p.y_weights = Mat::Constant(n, n, 1.0 / n);
  p.r_weights = Mat::Constant(n, n, 1.0 / n);
  return p;
}

RelocationPolicy induced_policy(const Mat& y, const Mat& r) {
  const int n = static_cast<int>(y.rows());
  auto normalize = [n](const Mat& m) {
    Mat w(n, n);
    for (int i = 0; i < n; ++i) {
      const double sum = m.row(i).sum();
      if (sum > 0.0) {
        w.row(i) = m.row(i) / sum;
      } else {
        w.row(i).setConstant(1.0 / n);
      }
    }
    return w;
  };
  RelocationPolicy p;
  p.y_weights = normalize(y);
  p.r_weights = normalize(r);
  return p;
}

FleetState step(const FleetState& state, const Vec& p, const Vec& delta,
                const RelocationPolicy& policy, const DemandPattern& pattern,
                const EconomicParams& params, Assignment assignment) {
  const int n = pattern.n();
  if (state.x.size() != n || state.z.size() != n || p.size() != n ||
      delta.size() != n) {
    throw ModelError(ModelErrc::DimensionMismatch,
                     "step: state/price/entry length differs from n");
  }
  const Vec d = demand_from_price(p, pattern, params);
  Vec u, v;
  serve_split(assignment, d, state.x, state.z, u, v);

  const Mat& a = pattern.alpha();
  const double beta = params.beta();
  FleetState next;
  next.x = Vec::Zero(n);
  next.z = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    double hv_in = 0.0, av_in = 0.0;
    for (int j = 0; j < n; ++j) {
      hv_in += a(j, i) * u(j) + (state.x(j) - u(j)) * policy.y_weights(j, i);
      av_in += a(j, i) * v(j) + (state.z(j) - v(j)) * policy.r_weights(j, i);
    }
    next.x(i) = beta * hv_in + delta(i);
    next.z(i) = av_in;
  }
  return next;
}

IterationResult iterate_to_fixed_point(const FleetState& initial, const Vec& p,
                                       const Vec& delta,
                                       const RelocationPolicy& policy,
                                       const DemandPattern& pattern,
                                       const EconomicParams& params,
                                       Assignment assignment, int max_steps,
                                       double tol) {
  if (tol <= 0.0) {
    throw ModelError(ModelErrc::BadParams,
                     "iterate_to_fixed_point: tol must be positive");
  }
  IterationResult out;
  out.state = initial;
  out.trajectory.reserve(static_cast<size_t>(std::max(max_steps, 0)));
  for (int t = 1; t <= max_steps; ++t) {
    FleetState next =
        step(out.state, p, delta, policy, pattern, params, assignment);
    double change = 0.0;
    for (int i = 0; i < pattern.n(); ++i) {
      change = std::max(change, std::abs(next.x(i) - out.state.x(i)));
      change = std::max(change, std::abs(next.z(i) - out.state.z(i)));
    }
    out.state = std::move(next);
    out.steps = t;
    out.trajectory.push_back(
        {t, out.state.x.sum(), out.state.z.sum(), change});
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace ridemix
