#pragma once

#include <cstdint>
#include <vector>

#include "hmdp/model.hpp"

namespace hmdp {

struct SolveOptions {
  double epsilon{1e-8};
  std::uint64_t max_iterations{1'000'000};
};

struct ValueSolution {
  std::vector<double> values;
  Policy policy;
  std::uint64_t iterations{0};
  double residual{0};

  double at(StateId s) const { return values[s]; }
};

struct VisitResult {
  std::vector<double> visits;
  std::uint64_t iterations{0};
  double residual{0};
};

/// Throws DivergentReward unless every policy reaches a target state
/// with probability 1 from every state reachable from the initial one.
/// Checked by end-component analysis on the transition support, so the
/// verdict is exact for the given graph. States without actions count
/// as absorbing.
void require_almost_sure_reachability(const ConcreteMdp& m);

/// Maximal expected reward until reaching a target state, by
/// Gauss-Seidel value iteration in state-index order with algebraic
/// self-loop resolution. Runs the almost-sure reachability precheck.
/// The returned policy is greedy in the converged values with ties
/// broken toward the lowest action index.
ValueSolution max_expected_reward(const ConcreteMdp& m,
                                  const SolveOptions& opts = {});

/// Maximal probability of reaching a goal state (goal need not equal
/// m.target; both absorb). No precheck; unreachable goals yield 0.
ValueSolution max_reachability(const ConcreteMdp& m,
                               const std::vector<bool>& goal,
                               const SolveOptions& opts = {});

/// Probability of reaching a goal state under a fixed policy, from the
/// initial state. States where the policy is unset use action 0.
double reachability_probability(const ConcreteMdp& m, const Policy& policy,
                                const std::vector<bool>& goal,
                                const SolveOptions& opts = {});

/// Expected number of visits per state for the chain induced by the
/// policy (first action where unset). Targets absorb: they are counted
/// on entry but do not propagate further. The model must reach targets
/// almost surely for the counts to be finite.
VisitResult expected_visits(const ConcreteMdp& m, const Policy& policy,
                            const SolveOptions& opts = {});

/// Min-max game on a vertex-relaxed model: one player picks actions,
/// the other picks a vertex alternative inside the chosen action.
/// Absorbing states contribute their terminal_value (0 for expected
/// rewards, 1 on the goal for reachability objectives).
struct VertexGame {
  struct SubRow {
    double reward{0};
    std::vector<ConcreteMdp::Branch> branches;
  };
  struct Action {
    std::vector<SubRow> alternatives;  // one per region vertex
  };

  std::vector<std::vector<Action>> states;  // empty action list = absorbing
  std::vector<double> terminal_value;       // per state, used when absorbing
  StateId initial{0};

  StateId state_count() const { return static_cast<StateId>(states.size()); }
};

enum class Role { kMax, kMin };

/// Gauss-Seidel iteration for the game value; action_role resolves the
/// outer action choice, vertex_role the inner vertex choice. Converges
/// from below, so intermediate values never overshoot the fixpoint.
ValueSolution game_value_iteration(const VertexGame& game, Role action_role,
                                   Role vertex_role,
                                   const SolveOptions& opts = {});

}  // namespace hmdp
