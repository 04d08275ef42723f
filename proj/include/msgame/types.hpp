#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace msgame {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Identifies one agent in the hierarchy. Level 1 agents are the leaves;
// a level-l agent for l >= 2 is a group of level-(l-1) agents.
struct AgentRef {
  int level = 1;
  int index = 0;
};

struct ActionBox {
  double lo = 0.0;
  double hi = 1e6;
};

struct Violation {
  std::string where;
  std::string what;
};

}  // namespace msgame
