#pragma once

#include "hmdp/value_iteration.hpp"

namespace hmdp {

/// MDP whose rows carry interval probabilities and whose states carry
/// interval rewards: the uncertain macro model after assigning a
/// suitable region to its slots. A branch with lo == hi is exact.
struct IntervalMdp {
  struct IBranch {
    StateId to{kNoState};
    double lo{0};
    double hi{0};
  };
  struct IRow {
    std::string action;
    std::vector<IBranch> branches;
  };

  std::vector<std::string> state_names;
  std::vector<std::vector<IRow>> rows;  // per state; empty = absorbing
  std::vector<double> reward_lo;
  std::vector<double> reward_hi;
  std::vector<bool> target;
  StateId initial{0};

  StateId state_count() const { return static_cast<StateId>(rows.size()); }
};

struct RobustBounds {
  double lower{0};
  double upper{0};
  ValueSolution lower_pass;  // raw values and witness policy, pessimistic
  ValueSolution upper_pass;  // raw values and witness policy, optimistic
};

/// Sound bracket around the maximal expected reward of every point
/// model inside the intervals. Both passes maximize over actions; the
/// row distribution is resolved against the player by shifting mass
/// between the interval ends in value order (so the inner optimum is
/// exact per row). Reported bounds are widened by the final residuals.
/// Throws SuitabilityViolation for empty or infeasible intervals and
/// DivergentReward if targets are not reached almost surely.
RobustBounds robust_value_bounds(const IntervalMdp& m,
                                 const SolveOptions& opts = {});

}  // namespace hmdp
