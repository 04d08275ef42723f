#pragma once

#include "msgame/game.hpp"

namespace msgame {

// Single-level view of a multi-scale game. W folds every level's sibling
// coupling down to leaf pairs; b folds the level benefits onto the members.
// The nonseparable group exponential terms cannot be folded and are kept in
// the per-level views, together with what is needed to evaluate the constant
// bookkeeping offset d_i.
struct FlatGame {
  int n = 0;
  Matrix W;
  Vector a, b, c, kappa;
  std::vector<ActionBox> boxes;

  struct LevelView {
    std::vector<std::vector<int>> leafset;  // leaves under each level-l agent
    std::vector<int> anc;                   // per leaf: its level-l ancestor
    Matrix coupling;                        // sibling adjacency among level-l agents
    Vector benefit;                         // per level-l agent (zeros when absent)
    bool gexp = false;
    double gkappa = 0.0;
  };
  std::vector<LevelView> lvl;  // [l-2]; empty for a game that was already flat

  bool has_exp() const {
    if (kappa.size() > 0 && kappa.maxCoeff() > 0.0) return true;
    for (const LevelView& v : lvl)
      if (v.gexp) return true;
    return false;
  }
};

FlatGame flatten(const MultiScaleGame& g);

// Utility of agent i at profile x, including the retained group terms.
double flat_utility(const FlatGame& f, const Vector& x, int i);

// u_multiscale(i) - u_flat(i): collects the parts of the ancestor-group
// payoffs that do not vary with x_i.
double d_offset(const FlatGame& f, const Vector& x, int i);

}  // namespace msgame
