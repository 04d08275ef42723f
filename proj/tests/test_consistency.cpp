#include "doctest.h"

#include <cmath>

#include "msgame/consistency.hpp"
#include "msgame/flatten.hpp"
#include "msgame/game.hpp"
#include "msgame/solvers.hpp"

using namespace msgame;

namespace {

MultiScaleGame paired_groups() {
  MultiScaleGame g;
  g.n_leaves = 4;
  g.n_levels = 2;
  HierarchyLevel h;
  h.groups = {{0, 1}, {2, 3}};
  Matrix w1 = Matrix::Zero(2, 2), w2 = Matrix::Zero(2, 2);
  w1(0, 1) = 0.4;
  w1(1, 0) = 0.7;
  w2(0, 1) = 0.2;
  w2(1, 0) = 0.5;
  h.within = {w1, w2};
  g.levels = {h};
  g.top = Matrix::Zero(2, 2);
  g.top(0, 1) = 0.6;
  g.top(1, 0) = 0.3;
  g.params.a = Vector::Zero(4);
  g.params.b = Vector(4);
  g.params.b << 0.8, 0.5, 0.9, 0.4;
  g.params.c = Vector(4);
  g.params.c << 1.0, 1.2, 0.9, 1.1;
  g.params.kappa = Vector::Zero(4);
  g.boxes.assign(4, ActionBox{0.0, 1e6});
  finalize(g);
  return g;
}

Vector group_sums(const MultiScaleGame& g, const Vector& x) {
  Vector y = Vector::Zero(static_cast<int>(g.levels[0].groups.size()));
  for (size_t k = 0; k < g.levels[0].groups.size(); ++k)
    for (int i : g.levels[0].groups[k]) y[static_cast<int>(k)] += x[i];
  return y;
}

}  // namespace

TEST_CASE("group stage equilibrium solves the quadratic stage") {
  GroupStageGame gs;
  gs.V = Matrix::Zero(2, 2);
  gs.b_G = Vector::Constant(2, 2.0);
  gs.c_group = Vector::Constant(2, 1.0);
  Vector y = group_stage_equilibrium(gs);
  CHECK(std::abs(y[0] - 1.0) <= 1e-12);
  CHECK(std::abs(y[1] - 1.0) <= 1e-12);

  GroupStageGame one;
  one.V = Matrix::Zero(1, 1);
  one.b_G = Vector::Constant(1, 3.0);
  one.c_group = Vector::Constant(1, 0.5);
  CHECK(std::abs(group_stage_equilibrium(one)[0] - 3.0) <= 1e-12);

  GroupStageGame pair;
  pair.V = Matrix::Zero(2, 2);
  pair.V(0, 1) = 1.0;
  pair.V(1, 0) = 1.0;
  pair.b_G = Vector::Constant(2, 1.0);
  pair.c_group = Vector::Constant(2, 1.0);
  Vector yp = group_stage_equilibrium(pair);
  CHECK(std::abs(yp[0] - 1.0) <= 1e-12);
  CHECK(std::abs(yp[1] - 1.0) <= 1e-12);
}

TEST_CASE("group stage validation flags degenerate inputs") {
  GroupStageGame gs;
  gs.V = Matrix::Zero(2, 2);
  gs.b_G = Vector::Constant(2, 1.0);
  gs.c_group = Vector::Constant(2, 1.0);
  CHECK(validate(gs).empty());
  gs.c_group[1] = 0.0;
  CHECK(!validate(gs).empty());
}

TEST_CASE("consistent costs invert the group stage") {
  std::vector<std::vector<int>> part = {{0, 1}, {2, 3}};
  Matrix V = Matrix::Zero(2, 2);
  V(0, 1) = 1.0;
  V(1, 0) = 1.0;
  Vector bg = Vector::Zero(2);
  Vector flat_eq(4);
  flat_eq << 1.0, 1.0, 2.0, 2.0;  // aggregates (2, 4)
  Vector cs = compute_consistent_costs(flat_eq, part, V, bg);
  CHECK(std::abs(cs[0] - 1.0) <= 1e-12);
  CHECK(std::abs(cs[1] - 0.25) <= 1e-12);

  GroupStageGame gs;
  gs.V = V;
  gs.b_G = bg;
  gs.c_group = cs;
  Vector y = group_stage_equilibrium(gs);
  CHECK(std::abs(y[0] - 2.0) <= 1e-10);
  CHECK(std::abs(y[1] - 4.0) <= 1e-10);

  // decoupled stage: costs reduce to benefit over twice the aggregate
  Vector bg2 = Vector::Constant(2, 1.0);
  Vector cs2 = compute_consistent_costs(flat_eq, part, Matrix::Zero(2, 2), bg2);
  CHECK(std::abs(cs2[0] - 0.25) <= 1e-12);
  CHECK(std::abs(cs2[1] - 0.125) <= 1e-12);

  Vector zeros = Vector::Zero(4);
  CHECK_THROWS(compute_consistent_costs(zeros, part, V, bg));
}

TEST_CASE("consistency check accepts its own costs and rejects scaled ones") {
  MultiScaleGame g = paired_groups();
  Vector star = direct_linear_equilibrium(flatten(g));
  Vector cs = compute_consistent_costs(star, g.levels[0].groups, g.top,
                                       Vector::Zero(2));
  ConsistencyVerdict good = check_consistency(g, cs);
  CHECK(good.consistent);
  CHECK(good.max_gap <= 1e-10);
  CHECK((good.c_star - cs).cwiseAbs().maxCoeff() <= 1e-10);
  ConsistencyVerdict bad = check_consistency(g, 2.0 * cs);
  CHECK(!bad.consistent);
  CHECK(bad.max_gap > 1e-8);
}

TEST_CASE("iterative calibration recovers the consistent costs") {
  MultiScaleGame g = paired_groups();
  Vector star = direct_linear_equilibrium(flatten(g));
  Vector ystar = group_sums(g, star);
  Vector cs = compute_consistent_costs(star, g.levels[0].groups, g.top,
                                       Vector::Zero(2));

  CalibrateResult r = calibrate_iterative(g);
  REQUIRE(r.converged);
  CHECK((r.c_group - cs).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((r.x - star).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((r.y_group - ystar).cwiseAbs().maxCoeff() <= 1e-6);

  CalibrateOptions far;
  far.c0 = Vector::Constant(2, 5.0);
  CalibrateResult r2 = calibrate_iterative(g, far);
  REQUIRE(r2.converged);
  CHECK((r2.c_group - r.c_group).cwiseAbs().maxCoeff() <= 1e-6);

  MultiScaleGame dec = paired_groups();
  dec.top.setZero();
  finalize(dec);
  CalibrateResult r3 = calibrate_iterative(dec);
  CHECK(r3.converged);
}
