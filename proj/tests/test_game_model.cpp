#include "doctest.h"

#include <random>

#include "msgame/detect.hpp"
#include "msgame/flatten.hpp"
#include "msgame/game.hpp"
#include "msgame/generator.hpp"

using namespace msgame;

namespace {

// Two groups of two leaves with directed within-group weights and a directed
// group coupling. Leaf and group exponential terms optional.
MultiScaleGame two_by_two(bool leaf_exp, bool group_exp) {
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
  g.params.kappa = leaf_exp ? Vector::Constant(4, 0.1) : Vector::Zero(4);
  if (group_exp) {
    g.params.group_exp = {1};
    g.params.group_kappa = {0.1};
  }
  g.boxes.assign(4, ActionBox{0.0, 1e6});
  finalize(g);
  return g;
}

MultiScaleGame single_agent(double b, double c) {
  MultiScaleGame g;
  g.n_leaves = 1;
  g.n_levels = 1;
  g.top = Matrix::Zero(1, 1);
  g.params.a = Vector::Zero(1);
  g.params.b = Vector::Constant(1, b);
  g.params.c = Vector::Constant(1, c);
  g.params.kappa = Vector::Zero(1);
  g.boxes.assign(1, ActionBox{0.0, 1e6});
  finalize(g);
  return g;
}

// Four leaves grouped (2,2), the two groups under one top agent.
MultiScaleGame three_level_chain() {
  MultiScaleGame g;
  g.n_leaves = 4;
  g.n_levels = 3;
  HierarchyLevel l2;
  l2.groups = {{0, 1}, {2, 3}};
  l2.within = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  HierarchyLevel l3;
  l3.groups = {{0, 1}};
  l3.within = {Matrix::Zero(2, 2)};
  g.levels = {l2, l3};
  g.top = Matrix::Zero(1, 1);
  g.params.a = Vector::Zero(4);
  g.params.b = Vector::Constant(4, 0.5);
  g.params.c = Vector::Constant(4, 1.0);
  g.params.kappa = Vector::Zero(4);
  g.boxes.assign(4, ActionBox{0.0, 1e6});
  finalize(g);
  return g;
}

}  // namespace

TEST_CASE("aggregate sums the child level") {
  MultiScaleGame g = two_by_two(false, false);
  Vector x(4);
  x << 1, 2, 3, 0;
  StrategyProfile p = make_profile(g, x);
  CHECK(aggregate(g, p, {2, 0}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(aggregate(g, p, {2, 1}) == doctest::Approx(3.0).epsilon(1e-15));
  x << 1, 2, 0, 0;
  p = make_profile(g, x);
  CHECK(aggregate(g, p, {2, 1}) == 0.0);
}

TEST_CASE("three-level aggregates compose the nested sums") {
  MultiScaleGame g = three_level_chain();
  Vector x = Vector::Ones(4);
  StrategyProfile p = make_profile(g, x);
  CHECK(aggregate(g, p, {3, 0}) == doctest::Approx(4.0).epsilon(1e-15));
  x << 1, 1, 2, 2;
  p = make_profile(g, x);
  CHECK(aggregate(g, p, {3, 0}) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(p.agg[1][0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("refresh_aggregates recomputes bottom-up and is idempotent") {
  GenSpec spec;
  spec.branching = {3, 4};
  spec.seed = 12;
  MultiScaleGame g = generate(spec);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Vector x(g.n_leaves);
  for (int i = 0; i < g.n_leaves; ++i) x[i] = u(rng);
  StrategyProfile p = make_profile(g, x);

  for (int k = 0; k < 4; ++k) {
    double direct = 0.0;
    for (int leaf : g.leafset[0][k]) direct += x[leaf];
    CHECK(p.agg[0][k] == doctest::Approx(direct).epsilon(1e-15));
  }
  std::vector<Vector> before = p.agg;
  refresh_aggregates(g, p);
  for (size_t l = 0; l < before.size(); ++l) CHECK((p.agg[l] - before[l]).norm() == 0.0);

  p.x.setOnes();
  refresh_aggregates(g, p);
  for (int k = 0; k < 4; ++k) CHECK(p.agg[0][k] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("aggregate is linear in the leaf profile") {
  MultiScaleGame g = three_level_chain();
  Vector x(4), z(4);
  x << 0.3, 1.1, 0.2, 0.9;
  z << 2.0, 0.1, 0.7, 0.4;
  const double al = 1.7, be = -0.6;
  StrategyProfile px = make_profile(g, x);
  StrategyProfile pz = make_profile(g, z);
  StrategyProfile pc = make_profile(g, al * x + be * z);
  for (int l = 2; l <= 3; ++l)
    for (int k = 0; k < g.level_count(l); ++k) {
      AgentRef r{l, k};
      CHECK(aggregate(g, pc, r) ==
            doctest::Approx(al * aggregate(g, px, r) + be * aggregate(g, pz, r)).epsilon(1e-12));
    }
}

TEST_CASE("utility of a lone agent is the quadratic payoff") {
  MultiScaleGame g = single_agent(1.0, 0.5);
  StrategyProfile p = make_profile(g, Vector::Constant(1, 1.0));
  CHECK(utility(g, p, {1, 0}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("utility at the zero profile isolates the exponential constants") {
  MultiScaleGame lin = two_by_two(false, false);
  StrategyProfile p0 = make_profile(lin, Vector::Zero(4));
  for (int i = 0; i < 4; ++i) CHECK(utility(lin, p0, {1, i}) == doctest::Approx(0.0));

  MultiScaleGame le = two_by_two(true, false);
  p0 = make_profile(le, Vector::Zero(4));
  for (int i = 0; i < 4; ++i) CHECK(utility(le, p0, {1, i}) == doctest::Approx(-1.0));

  // the size-normalized group term contributes -|S| e^0 = -2 on top of the leaf's -1
  MultiScaleGame ge = two_by_two(true, true);
  p0 = make_profile(ge, Vector::Zero(4));
  for (int i = 0; i < 4; ++i) CHECK(utility(ge, p0, {1, i}) == doctest::Approx(-3.0));
  CHECK(level_component(ge, p0, 2, 0) == doctest::Approx(-2.0));
}

TEST_CASE("utility includes the ancestor group's coupling component") {
  // two singleton groups coupled both ways with weight 1
  MultiScaleGame g;
  g.n_leaves = 2;
  g.n_levels = 2;
  HierarchyLevel h;
  h.groups = {{0}, {1}};
  h.within = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  g.levels = {h};
  g.top = Matrix::Zero(2, 2);
  g.top(0, 1) = 1.0;
  g.top(1, 0) = 1.0;
  g.params.a = Vector::Zero(2);
  g.params.b = Vector::Ones(2);
  g.params.c = Vector::Ones(2);
  g.params.kappa = Vector::Zero(2);
  g.boxes.assign(2, ActionBox{0.0, 1e6});
  finalize(g);
  Vector x(2);
  x << 2, 3;
  StrategyProfile p = make_profile(g, x);
  CHECK(utility(g, p, {1, 0}) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("utility pins the hand-evaluated nonlinear reference value") {
  MultiScaleGame g = two_by_two(true, true);
  Vector x(4);
  x << 0.2, 0.4, 0.6, 0.8;
  StrategyProfile p = make_profile(g, x);
  CHECK(utility(g, p, {1, 0}) == doctest::Approx(-2.257110407933790).epsilon(1e-13));
}

TEST_CASE("flatten spreads the group coupling over member pairs") {
  MultiScaleGame g;
  g.n_leaves = 4;
  g.n_levels = 2;
  HierarchyLevel h;
  h.groups = {{0, 1}, {2, 3}};
  const double w = 0.3, v = 0.8;
  Matrix wb = Matrix::Zero(2, 2);
  wb(0, 1) = w;
  wb(1, 0) = w;
  h.within = {wb, wb};
  g.levels = {h};
  g.top = Matrix::Zero(2, 2);
  g.top(0, 1) = v;
  g.top(1, 0) = v;
  g.params.a = Vector::Zero(4);
  g.params.b = Vector::Ones(4);
  g.params.c = Vector::Ones(4);
  g.params.kappa = Vector::Zero(4);
  g.boxes.assign(4, ActionBox{0.0, 1e6});
  finalize(g);

  FlatGame f = flatten(g);
  Matrix expect(4, 4);
  expect << 0, w, v, v, w, 0, v, v, v, v, 0, w, v, v, w, 0;
  CHECK((f.W - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f.b - g.params.b).norm() == 0.0);
  CHECK((f.c - g.params.c).norm() == 0.0);
}

TEST_CASE("flatten of a single group leaves the adjacency untouched") {
  MultiScaleGame g;
  g.n_leaves = 3;
  g.n_levels = 2;
  HierarchyLevel h;
  h.groups = {{0, 1, 2}};
  Matrix w = Matrix::Zero(3, 3);
  w(0, 1) = 0.2;
  w(1, 2) = 0.9;
  w(2, 0) = 0.4;
  h.within = {w};
  g.levels = {h};
  g.top = Matrix::Zero(1, 1);
  g.params.a = Vector::Zero(3);
  g.params.b = Vector::Ones(3);
  g.params.c = Vector::Ones(3);
  g.params.kappa = Vector::Zero(3);
  g.boxes.assign(3, ActionBox{0.0, 1e6});
  finalize(g);
  FlatGame f = flatten(g);
  CHECK((f.W - w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("multi-scale utility equals the flat utility plus its offset") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  for (bool gexp : {false, true}) {
    MultiScaleGame g = two_by_two(true, gexp);
    FlatGame f = flatten(g);
    for (int t = 0; t < 20; ++t) {
      Vector x(4);
      for (int i = 0; i < 4; ++i) x[i] = u(rng);
      StrategyProfile p = make_profile(g, x);
      for (int i = 0; i < 4; ++i) {
        const double ms = utility(g, p, {1, i});
        const double fl = flat_utility(f, x, i) + d_offset(f, x, i);
        CHECK(ms == doctest::Approx(fl).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("structure detection round-trips a flattened game") {
  MultiScaleGame g = two_by_two(false, false);
  FlatGame f = flatten(g);

  DetectResult with_partition = detect_structure(f, {{0, 1}, {2, 3}}, 0.0);
  REQUIRE(with_partition.ok);
  CHECK((with_partition.game.top - g.top).cwiseAbs().maxCoeff() == 0.0);
  for (int k = 0; k < 2; ++k)
    CHECK((with_partition.game.levels[0].within[k] - g.levels[0].within[k]).cwiseAbs().maxCoeff() ==
          0.0);

  DetectResult discovered = detect_structure(f, 1e-9);
  REQUIRE(discovered.ok);
  REQUIRE(discovered.game.levels[0].groups.size() == 2);
  CHECK((discovered.game.top - g.top).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("detection fails on an unstructured adjacency") {
  FlatGame f;
  f.n = 4;
  f.W = Matrix::Zero(4, 4);
  double v = 0.11;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) f.W(i, j) = (v += 0.13);
  f.a = Vector::Zero(4);
  f.b = Vector::Ones(4);
  f.c = Vector::Ones(4);
  f.kappa = Vector::Zero(4);
  f.boxes.assign(4, ActionBox{0.0, 1e6});
  DetectResult r = detect_structure(f, 1e-9);
  CHECK_FALSE(r.ok);
  CHECK(r.game.n_levels == 1);
}

TEST_CASE("detection names the pair behind a broken cross-block weight") {
  MultiScaleGame g = two_by_two(false, false);
  FlatGame f = flatten(g);
  const double tol = 1e-6;
  f.W(0, 2) += 2.0 * tol;
  DetectResult r = detect_structure(f, {{0, 1}, {2, 3}}, tol);
  REQUIRE_FALSE(r.ok);
  CHECK(r.group_k == 0);
  CHECK(r.group_m == 1);
  CHECK(((r.agent_i == 0 && r.agent_j == 2) || (r.agent_i == 0 && r.agent_j == 3) ||
         (r.agent_i == 1 && r.agent_j == 2) || (r.agent_i == 1 && r.agent_j == 3)));
}

TEST_CASE("validate accepts generator output and flags broken games") {
  GenSpec spec;
  spec.branching = {4, 3};
  spec.seed = 3;
  MultiScaleGame good = scale_to_target_rho(generate(spec), 0.75);
  CHECK(validate(good).empty());

  MultiScaleGame bad_cost = good;
  bad_cost.params.c[2] = 0.0;
  auto v1 = validate(bad_cost);
  REQUIRE_FALSE(v1.empty());
  bool found = false;
  for (const auto& vi : v1) found = found || vi.what.find("cost") != std::string::npos;
  CHECK(found);

  MultiScaleGame bad_part = good;
  bad_part.levels[0].groups[0].pop_back();
  auto v2 = validate(bad_part);
  REQUIRE_FALSE(v2.empty());
  found = false;
  for (const auto& vi : v2) found = found || vi.what.find("covering") != std::string::npos;
  CHECK(found);
}
