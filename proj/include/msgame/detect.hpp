#pragma once

#include "msgame/flatten.hpp"

#include <optional>

namespace msgame {

// Outcome of structure recovery on a flat adjacency matrix.
// On success `game` is the two-level reconstruction. On failure `reason`
// explains why, and when a specific cross-group weight broke constancy the
// offending agent and group pair are filled in.
struct DetectResult {
  bool ok = false;
  MultiScaleGame game;  // reconstruction, or the trivial single-level game on failure
  std::string reason;
  int agent_i = -1, agent_j = -1;
  int group_k = -1, group_m = -1;
};

// Verification mode: checks that every ordered group pair of `partition` has a
// constant cross-group weight (within absolute tol) and rebuilds V and the
// per-group blocks.
DetectResult detect_structure(const FlatGame& f, const std::vector<std::vector<int>>& partition,
                              double tol = 1e-9);

// Discovery mode: searches for the coarsest grouping whose members share
// external weight signatures, then verifies it. All-singleton outcomes are
// reported as failure carrying the single-level game unchanged.
DetectResult detect_structure(const FlatGame& f, double tol = 1e-9);

}  // namespace msgame
