#pragma once

#include "msgame/types.hpp"

namespace msgame {

// Partition of the level below into groups, plus the adjacency among each
// group's members. levels[l-2] holds the level-l partition, so its `within`
// matrices drive the level-(l-1) utility components.
struct HierarchyLevel {
  std::vector<std::vector<int>> groups;  // child indices, each child in exactly one group
  std::vector<Matrix> within;            // within[k] is |groups[k]| x |groups[k]|, zero diagonal
};

struct UtilityParams {
  Vector a;      // per-leaf standalone payoff
  Vector b;      // per-leaf linear benefit
  Vector c;      // per-leaf quadratic cost, strictly positive
  Vector kappa;  // per-leaf exponential-cost rate; 0 disables the term

  // Per level l >= 2 (index l-2):
  std::vector<Vector> level_benefit;  // benefit per level-l agent; empty means all-zero
  std::vector<char> group_exp;        // group exponential cost enabled for that level
  std::vector<double> group_kappa;    // its rate
};

struct MultiScaleGame {
  int n_leaves = 0;
  int n_levels = 1;                    // L
  std::vector<HierarchyLevel> levels;  // [l-2] for l = 2..L; empty when L == 1
  Matrix top;                          // adjacency among the level-L agents
  UtilityParams params;
  std::vector<ActionBox> boxes;        // per leaf

  // Derived navigation, built by finalize().
  std::vector<std::vector<int>> parent;   // parent[l-1][i]: level-(l+1) group of level-l agent i
  std::vector<std::vector<int>> local;    // local[l-1][i]: position of i inside that group
  std::vector<std::vector<std::vector<int>>> leafset;  // leafset[l-2][k]: leaves under level-l agent k

  int level_count(int l) const {
    return l == 1 ? n_leaves : static_cast<int>(levels[l - 2].groups.size());
  }
  int parent_of(int l, int i) const { return parent[l - 1][i]; }
  int local_of(int l, int i) const { return local[l - 1][i]; }
  int leaves_under(int l, int k) const {
    return l == 1 ? 1 : static_cast<int>(leafset[l - 2][k].size());
  }
  // Ancestor of leaf i at level l (l >= 1).
  int ancestor(int l, int i) const {
    int a = i;
    for (int m = 1; m < l; ++m) a = parent[m - 1][a];
    return a;
  }
  // Adjacency row among level-l agents: fills `row` (dense over level-l indices).
  // For l == L this is a row of `top`; below that it is a row of the enclosing
  // group's within matrix scattered to global indices.
  void coupling_row(int l, int j, Vector& row) const;
};

// Builds parent/local/leafset tables. Call after assembling the raw fields.
void finalize(MultiScaleGame& g);

// Structural and parameter checks; empty result means the game is well formed.
std::vector<Violation> validate(const MultiScaleGame& g);

struct StrategyProfile {
  Vector x;                  // leaf actions
  std::vector<Vector> agg;   // agg[l-2]: aggregate of each level-l agent
};

StrategyProfile make_profile(const MultiScaleGame& g, const Vector& x);

// Recomputes every aggregate bottom-up from the leaves. Idempotent.
void refresh_aggregates(const MultiScaleGame& g, StrategyProfile& p);

// Sum of the child-level values of a level >= 2 agent (children's values must
// be current; refresh_aggregates guarantees that).
double aggregate(const MultiScaleGame& g, const StrategyProfile& p, AgentRef ref);

// Utility component u^(l) of one level-l agent.
double level_component(const MultiScaleGame& g, const StrategyProfile& p, int l, int j);

// For a leaf: the full multi-scale utility (its component plus every ancestor
// group's component). For level >= 2: that agent's own component.
double utility(const MultiScaleGame& g, const StrategyProfile& p, AgentRef ref);

}  // namespace msgame
