#pragma once

#include <stdexcept>
#include <string>

namespace rggfpp {

class NoVertices : public std::runtime_error {
 public:
  NoVertices() : std::runtime_error("point cloud has no vertices") {}
};

class NoGiantComponent : public std::runtime_error {
 public:
  NoGiantComponent() : std::runtime_error("graph has no giant component") {}
};

/// Passage-time law violates positivity of the support or lacks exponential moments.
class DistributionRejected : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Hop budget smaller than the lattice-only path, so no admissible path exists.
class BudgetInfeasible : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotAnExcursion : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rggfpp
