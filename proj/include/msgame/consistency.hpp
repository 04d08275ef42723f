#pragma once

#include <optional>
#include <vector>

#include "msgame/game.hpp"

namespace msgame {

// Group-stage abstraction of a 2-level linear game: each group acts as one
// player with quadratic cost c_group and inter-group adjacency V.
struct GroupStageGame {
  Matrix V;
  Vector b_G;
  Vector c_group;
};

std::vector<Violation> validate(const GroupStageGame& gs);

// Unique stationary point of the group stage. Throws when the stationarity
// system is singular.
Vector group_stage_equilibrium(const GroupStageGame& gs);

// The unique group costs making the group stage reproduce the given flat
// equilibrium aggregates: c* = (V y* + b_G) / (2 y*), elementwise.
Vector compute_consistent_costs(const Vector& flat_eq,
                                const std::vector<std::vector<int>>& partition, const Matrix& V,
                                const Vector& b_G);

struct ConsistencyVerdict {
  bool consistent = false;
  double max_gap = 0.0;
  Vector c_star;
};

// Compares group-stage predictions under c_group against the aggregates of
// the exact flat equilibrium. The game's level-2 benefits play the role of
// b_G (zero when absent).
ConsistencyVerdict check_consistency(const MultiScaleGame& g, const Vector& c_group,
                                     double tol = 1e-8);

struct CalibrateOptions {
  int s1 = 1;             // agent sweeps per round
  int s2 = 1;             // group-stage sweeps per round
  int max_rounds = 20000;
  double tol = 1e-8;
  std::optional<Vector> c0;  // initial group costs, ones when absent
};

struct CalibrateResult {
  Vector c_group;
  Vector x;
  Vector y_group;  // group-stage estimates at exit
  int rounds = 0;
  bool converged = false;
  int skipped_updates = 0;  // zero-aggregate rounds where a cost was held
};

// Alternates group-stage sweeps, within-group agent sweeps against the
// group-stage estimates, and the closed-form cost update from realized
// aggregates, until costs, profile, and estimates all settle.
CalibrateResult calibrate_iterative(const MultiScaleGame& g, const CalibrateOptions& o = {});

}  // namespace msgame
