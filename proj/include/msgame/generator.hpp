#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msgame/game.hpp"

namespace msgame {

// Random instance recipes. branching lists the tree shape bottom-up:
// branching[0] members per level-2 group, branching[1] level-2 groups per
// level-3 group (or the number of level-2 groups when L == 2), and so on;
// the last entry is the number of top-level agents. "30x30" means 30 groups
// of 30 leaves.
struct GenSpec {
  enum class Family { Linear, Nonlinear, Mixed };

  std::vector<int> branching;
  double p_exist = 0.1;
  Family family = Family::Linear;
  double kappa = 0.1;
  double rho_target = 0.75;
  std::uint64_t seed = 0;

  int levels() const { return static_cast<int>(branching.size()); }
};

std::vector<Violation> validate(const GenSpec& spec);

GenSpec::Family family_from_name(const std::string& s);
const char* family_name(GenSpec::Family f);

// "30x30" -> {30, 30}; "10x10x10" -> {10, 10, 10}
std::vector<int> parse_branching(const std::string& size);
std::string branching_string(const std::vector<int>& branching);

// Bernoulli(p_exist) directed edges with U[0,1] weights inside every group at
// every level, zero diagonals, b ~ U[0,1]. Cost coefficients are left at 1;
// scale_to_target_rho below sets them. Identical spec gives a bit-identical
// game: one generator stream per purpose (edges, weights, b), split from the
// seed.
MultiScaleGame generate(const GenSpec& spec);

// Sets c_i = r_i / (2 rho_target), r_i the absolute row sum of the flattened
// coupling, which makes the certificate ratio matrix have row sums equal to
// rho_target (below it when exponential curvature is present). Rows with no
// coupling get c_i = 0.5 and are reported through `decoupled`.
MultiScaleGame scale_to_target_rho(const MultiScaleGame& g, double rho_target,
                                   std::vector<int>* decoupled = nullptr);

}  // namespace msgame
