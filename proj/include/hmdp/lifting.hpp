#pragma once

#include <vector>

#include "hmdp/model.hpp"
#include "hmdp/value_iteration.hpp"

namespace hmdp {

/// Smallest axis-aligned box containing every valuation of the set.
Region to_region(const std::vector<Valuation>& valuations);

/// Vertex relaxation of a template over a region: every action of a
/// state expands into one alternative per vertex of the region
/// projected onto the parameters that occur in the state's rows or
/// reward. Multilinearity makes the per-state extrema sit on those
/// vertices, which is what justifies the min/max game bounds.
struct VertexRelaxation {
  VertexGame reward_game;
  std::vector<std::vector<std::vector<double>>> state_vertices;  // per state
  std::vector<StateId> exits;

  /// Same relaxation with a reachability objective: rewards dropped,
  /// terminal value 1 at the given exit (by template exit order).
  VertexGame reachability_game(std::uint32_t exit_index) const;
};

/// Builds the relaxation; throws CapExceeded if more than
/// max_vertex_params parameters occur locally in one state and
/// GraphChange/NotWellDefined via the region admission check.
VertexRelaxation make_vertex_relaxation(const TemplateModel& tmpl,
                                        const Region& region,
                                        unsigned max_vertex_params = 16);

struct CheckOneResult {
  ResultVector result;
  Policy policy;  // over template states, original action indices
};

/// Exact (to epsilon) analysis of one template instance. In
/// single-successor mode the policy maximizes expected reward with
/// ties toward the lowest action index and the exit probability is 1.
/// In success-target mode the policy maximizes the success-exit
/// probability, then expected reward among probability-preserving
/// actions, then the lowest index; the result carries that policy's
/// exit probabilities and expected reward.
CheckOneResult check_one(const TemplateModel& tmpl, const Valuation& valuation,
                         HierarchyMode mode, std::uint32_t success_exit = 0,
                         const SolveOptions& opts = {});

/// Sound component-wise bracket around check_one over a whole region:
/// rewards from the (action max, vertex min) and (max, max) games,
/// success probabilities from the corresponding reachability games,
/// the second exit as the complement interval. Bounds are widened by
/// the final residuals and clamped to their natural ranges.
ResultBounds bound_results_for_set(const TemplateModel& tmpl,
                                   const Region& region, HierarchyMode mode,
                                   std::uint32_t success_exit = 0,
                                   const SolveOptions& opts = {});

}  // namespace hmdp
