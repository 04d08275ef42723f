#include "msgame/consistency.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

#include "msgame/flatten.hpp"
#include "msgame/solvers.hpp"

namespace msgame {

namespace {

void require_two_level_linear(const MultiScaleGame& g, const char* who) {
  if (g.n_levels != 2) throw std::invalid_argument(std::string(who) + ": game must have two levels");
  if (g.params.kappa.size() && g.params.kappa.maxCoeff() > 0.0)
    throw std::invalid_argument(std::string(who) + ": game must have linear best responses");
  for (size_t l = 0; l < g.params.group_exp.size(); ++l)
    if (g.params.group_exp[l])
      throw std::invalid_argument(std::string(who) + ": game must have linear best responses");
}

Vector game_b_G(const MultiScaleGame& g) {
  const int M = g.level_count(2);
  if (!g.params.level_benefit.empty() && g.params.level_benefit[0].size() == M)
    return g.params.level_benefit[0];
  return Vector::Zero(M);
}

}  // namespace

std::vector<Violation> validate(const GroupStageGame& gs) {
  std::vector<Violation> out;
  const int M = static_cast<int>(gs.V.rows());
  if (gs.V.cols() != M) out.push_back({"V", "V must be square"});
  for (int k = 0; k < std::min<int>(M, gs.V.cols()); ++k)
    if (gs.V(k, k) != 0.0) out.push_back({"V", "V must have zero diagonal"});
  if (gs.b_G.size() != M) out.push_back({"b_G", "b_G size mismatch"});
  if (gs.c_group.size() != M) out.push_back({"c_group", "c_group size mismatch"});
  for (int k = 0; k < gs.c_group.size(); ++k)
    if (!(gs.c_group[k] > 0.0)) out.push_back({"c_group", "nonpositive quadratic cost"});
  return out;
}

Vector group_stage_equilibrium(const GroupStageGame& gs) {
  {
    const auto errs = validate(gs);
    if (!errs.empty())
      throw std::invalid_argument("group_stage_equilibrium: " + errs.front().what);
  }
  Matrix A = -gs.V;
  for (int k = 0; k < A.rows(); ++k) A(k, k) += 2.0 * gs.c_group[k];
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible())
    throw std::runtime_error("group_stage_equilibrium: Assumption 1 violated");
  return lu.solve(gs.b_G);
}

Vector compute_consistent_costs(const Vector& flat_eq,
                                const std::vector<std::vector<int>>& partition, const Matrix& V,
                                const Vector& b_G) {
  const int M = static_cast<int>(partition.size());
  if (V.rows() != M || V.cols() != M)
    throw std::invalid_argument("compute_consistent_costs: V shape mismatch");
  if (b_G.size() != M) throw std::invalid_argument("compute_consistent_costs: b_G size mismatch");
  Vector y(M);
  for (int k = 0; k < M; ++k) {
    double s = 0.0;
    for (int i : partition[k]) {
      if (i < 0 || i >= flat_eq.size())
        throw std::invalid_argument("compute_consistent_costs: partition index out of range");
      s += flat_eq[i];
    }
    y[k] = s;
  }
  Vector c(M);
  for (int k = 0; k < M; ++k) {
    if (y[k] == 0.0)
      throw std::runtime_error("consistency cost undefined for group " + std::to_string(k));
    c[k] = (V.row(k).dot(y) + b_G[k]) / (2.0 * y[k]);
  }
  return c;
}

ConsistencyVerdict check_consistency(const MultiScaleGame& g, const Vector& c_group, double tol) {
  require_two_level_linear(g, "check_consistency");
  const Matrix& V = g.top;
  const Vector b_G = game_b_G(g);
  const FlatGame f = flatten(g);
  const Vector xstar = direct_linear_equilibrium(f);
  const auto& partition = g.levels[0].groups;
  const int M = static_cast<int>(partition.size());
  Vector ystar(M);
  for (int k = 0; k < M; ++k) {
    double s = 0.0;
    for (int i : partition[k]) s += xstar[i];
    ystar[k] = s;
  }
  const Vector ytilde = group_stage_equilibrium({V, b_G, c_group});
  ConsistencyVerdict out;
  out.max_gap = (ytilde - ystar).lpNorm<Eigen::Infinity>();
  out.consistent = out.max_gap <= tol;
  out.c_star = compute_consistent_costs(xstar, partition, V, b_G);
  return out;
}

CalibrateResult calibrate_iterative(const MultiScaleGame& g, const CalibrateOptions& o) {
  require_two_level_linear(g, "calibrate_iterative");
  if (o.s1 < 1 || o.s2 < 1)
    throw std::invalid_argument("calibrate_iterative: sweep counts must be positive");
  if (!(o.tol > 0.0)) throw std::invalid_argument("calibrate_iterative: tol must be positive");
  const auto& partition = g.levels[0].groups;
  const int M = static_cast<int>(partition.size());
  const int N = g.n_leaves;
  const Matrix& V = g.top;
  const Vector b_G = game_b_G(g);

  CalibrateResult res;
  res.c_group = o.c0.value_or(Vector::Ones(M));
  if (res.c_group.size() != M)
    throw std::invalid_argument("calibrate_iterative: c0 size mismatch");
  for (int k = 0; k < M; ++k)
    if (!(res.c_group[k] > 0.0))
      throw std::invalid_argument("calibrate_iterative: c0 must be positive");

  Vector x = Vector::Zero(N);
  for (int i = 0; i < N; ++i)
    x[i] = std::min(std::max(0.0, g.boxes[i].lo), g.boxes[i].hi);
  std::vector<int> group_of(N);
  for (int k = 0; k < M; ++k)
    for (int i : partition[k]) group_of[i] = k;
  Vector yhat(M);
  auto aggregates = [&](const Vector& from) {
    yhat.setZero();
    for (int i = 0; i < N; ++i) yhat[group_of[i]] += from[i];
  };
  aggregates(x);
  Vector ytilde = yhat;

  for (int round = 1; round <= o.max_rounds; ++round) {
    res.rounds = round;
    // group stage under current costs
    for (int sweep = 0; sweep < o.s2; ++sweep)
      for (int k = 0; k < M; ++k)
        ytilde[k] = (b_G[k] + V.row(k).dot(ytilde)) / (2.0 * res.c_group[k]);
    // agents best-respond against the group-stage estimates of the other groups
    double agent_res = 0.0;
    for (int sweep = 0; sweep < o.s1; ++sweep) {
      agent_res = 0.0;
      for (int k = 0; k < M; ++k) {
        const Matrix& Wk = g.levels[0].within[k];
        const double cross = V.row(k).dot(ytilde);
        for (size_t r = 0; r < partition[k].size(); ++r) {
          const int i = partition[k][r];
          double coupling = cross;
          for (size_t r2 = 0; r2 < partition[k].size(); ++r2)
            coupling += Wk(r, r2) * x[partition[k][r2]];
          const double v =
              best_response_linear(g.params.b[i] + b_G[k], g.params.c[i], coupling, g.boxes[i]);
          agent_res = std::max(agent_res, std::abs(v - x[i]));
          x[i] = v;
        }
      }
    }
    aggregates(x);
    // closed-form cost update from realized aggregates
    const Vector c_prev = res.c_group;
    for (int k = 0; k < M; ++k) {
      if (yhat[k] == 0.0) {
        ++res.skipped_updates;
        continue;
      }
      const double c = (V.row(k).dot(yhat) + b_G[k]) / (2.0 * yhat[k]);
      if (c > 0.0) res.c_group[k] = c;
      else ++res.skipped_updates;
    }
    const double dc = (res.c_group - c_prev).lpNorm<Eigen::Infinity>();
    const double gap = (yhat - ytilde).lpNorm<Eigen::Infinity>();
    if (agent_res < o.tol && gap < o.tol && dc < o.tol) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.y_group = ytilde;
  return res;
}

}  // namespace msgame
