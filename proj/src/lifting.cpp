#include "hmdp/lifting.hpp"

#include <algorithm>
#include <cmath>

#include "hmdp/errors.hpp"

namespace hmdp {

Region to_region(const std::vector<Valuation>& valuations) {
  if (valuations.empty())
    throw Error("cannot build a region from an empty valuation set");
  Region r{valuations.front().values, valuations.front().values};
  for (const Valuation& v : valuations) {
    if (v.values.size() != r.lower.size())
      throw Error("valuations of mixed arity in one set");
    for (std::size_t i = 0; i < v.values.size(); ++i) {
      r.lower[i] = std::min(r.lower[i], v.values[i]);
      r.upper[i] = std::max(r.upper[i], v.values[i]);
    }
  }
  return r;
}

VertexGame VertexRelaxation::reachability_game(std::uint32_t exit_index) const {
  VertexGame g = reward_game;
  for (auto& state : g.states)
    for (auto& action : state)
      for (auto& sub : action.alternatives) sub.reward = 0;
  std::fill(g.terminal_value.begin(), g.terminal_value.end(), 0.0);
  g.terminal_value[exits.at(exit_index)] = 1.0;
  return g;
}

VertexRelaxation make_vertex_relaxation(const TemplateModel& tmpl,
                                        const Region& region,
                                        unsigned max_vertex_params) {
  require_graph_preserving(tmpl, region);
  const Pmdp& m = tmpl.core;
  StateId n = m.state_count();
  VertexRelaxation out;
  out.exits = tmpl.exits;
  out.reward_game.initial = tmpl.entry;
  out.reward_game.terminal_value.assign(n, 0.0);
  out.reward_game.states.resize(n);
  out.state_vertices.resize(n);
  for (StateId s = 0; s < n; ++s) {
    if (m.rows[s].empty()) continue;  // exits stay absorbing
    // Locally occurring parameters: anything in the state's reward or
    // in any outgoing branch probability.
    std::vector<std::uint32_t> local = m.rewards[s].variables();
    for (const auto& row : m.rows[s]) {
      for (const auto& b : row.branches) {
        std::vector<std::uint32_t> vs = b.probability.variables();
        local.insert(local.end(), vs.begin(), vs.end());
      }
    }
    std::sort(local.begin(), local.end());
    local.erase(std::unique(local.begin(), local.end()), local.end());
    if (local.size() > max_vertex_params)
      throw CapExceeded("state " + m.state_names[s] + " depends on " +
                        std::to_string(local.size()) +
                        " parameters; vertex enumeration is capped at " +
                        std::to_string(max_vertex_params));
    // One relaxation point per vertex of the local projection; the
    // remaining coordinates are fixed mid-region (they do not occur).
    std::vector<double> base(region.lower.size());
    for (std::size_t i = 0; i < base.size(); ++i)
      base[i] = 0.5 * (region.lower[i] + region.upper[i]);
    std::uint64_t count = std::uint64_t{1} << local.size();
    out.state_vertices[s].reserve(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      std::vector<double> point = base;
      for (std::size_t k = 0; k < local.size(); ++k)
        point[local[k]] =
            (mask >> k) & 1 ? region.upper[local[k]] : region.lower[local[k]];
      out.state_vertices[s].push_back(std::move(point));
    }
    for (const auto& row : m.rows[s]) {
      VertexGame::Action action;
      action.alternatives.reserve(out.state_vertices[s].size());
      for (const auto& point : out.state_vertices[s]) {
        VertexGame::SubRow sub;
        sub.reward = m.rewards[s].evaluate(point);
        for (const auto& b : row.branches)
          sub.branches.push_back({b.to, b.probability.evaluate(point)});
        action.alternatives.push_back(std::move(sub));
      }
      out.reward_game.states[s].push_back(std::move(action));
    }
  }
  return out;
}

namespace {

/// Support view of the relaxed game (first alternative per action) for
/// the almost-sure reachability precheck; graph preservation makes the
/// support identical across alternatives.
ConcreteMdp support_view(const VertexGame& game, const TemplateModel& tmpl) {
  ConcreteMdp m;
  StateId n = game.state_count();
  m.state_names = tmpl.core.state_names;
  m.target = tmpl.core.target;
  m.initial = game.initial;
  m.rewards.assign(n, 0.0);
  m.rows.resize(n);
  for (StateId s = 0; s < n; ++s) {
    for (const auto& action : game.states[s]) {
      ConcreteMdp::Row row;
      for (const auto& b : action.alternatives.front().branches)
        if (b.probability > 0) row.branches.push_back(b);
      m.rows[s].push_back(std::move(row));
    }
  }
  return m;
}

/// Row value against converged reachability values, matching the
/// engine's self-loop resolution so conservation tests line up.
double reach_row_value(StateId s, const ConcreteMdp::Row& row,
                       const std::vector<double>& values) {
  double self_mass = 0, rest = 0;
  for (const auto& b : row.branches) {
    if (b.to == s)
      self_mass += b.probability;
    else
      rest += b.probability * values[b.to];
  }
  double denom = 1.0 - self_mass;
  if (denom < 1e-12) denom = 1e-12;
  return std::min(rest / denom, 1.0);
}

}  // namespace

CheckOneResult check_one(const TemplateModel& tmpl, const Valuation& valuation,
                         HierarchyMode mode, std::uint32_t success_exit,
                         const SolveOptions& opts) {
  if (!tmpl.admissible.contains(valuation))
    throw NotWellDefined("valuation outside the admissible parameter box");
  ConcreteMdp inst = instantiate(tmpl.core, valuation);
  CheckOneResult out;
  if (mode == HierarchyMode::kSingleSuccessor) {
    ValueSolution sol = max_expected_reward(inst, opts);
    out.result.reward = sol.at(tmpl.entry);
    out.result.exit_probabilities = {1.0};
    out.policy = sol.policy;
    return out;
  }

  // Success-target mode: lexicographic objective. First the maximal
  // probability of the success exit, then the maximal expected reward
  // among actions preserving that probability.
  std::vector<bool> goal(inst.state_count(), false);
  goal[tmpl.exits.at(success_exit)] = true;
  ValueSolution reach = max_reachability(inst, goal, opts);
  double conserve_tol = std::max(1e-9, 10 * opts.epsilon);

  ConcreteMdp restricted = inst;
  std::vector<std::vector<std::size_t>> back_map(inst.state_count());
  for (StateId s = 0; s < inst.state_count(); ++s) {
    if (inst.target[s] || inst.rows[s].empty()) continue;
    restricted.rows[s].clear();
    for (std::size_t a = 0; a < inst.rows[s].size(); ++a) {
      double v = reach_row_value(s, inst.rows[s][a], reach.values);
      if (v >= reach.values[s] - conserve_tol) {
        restricted.rows[s].push_back(inst.rows[s][a]);
        back_map[s].push_back(a);
      }
    }
  }
  ValueSolution rew = max_expected_reward(restricted, opts);
  out.result.reward = rew.at(tmpl.entry);
  out.policy.choice.assign(inst.state_count(), -1);
  for (StateId s = 0; s < inst.state_count(); ++s) {
    if (rew.policy.choice[s] >= 0)
      out.policy.choice[s] = static_cast<std::int32_t>(
          back_map[s][static_cast<std::size_t>(rew.policy.choice[s])]);
  }
  out.result.exit_probabilities.resize(tmpl.exits.size());
  for (std::size_t j = 0; j < tmpl.exits.size(); ++j) {
    std::vector<bool> exit_goal(inst.state_count(), false);
    exit_goal[tmpl.exits[j]] = true;
    out.result.exit_probabilities[j] =
        reachability_probability(inst, out.policy, exit_goal, opts);
  }
  return out;
}

ResultBounds bound_results_for_set(const TemplateModel& tmpl,
                                   const Region& region, HierarchyMode mode,
                                   std::uint32_t success_exit,
                                   const SolveOptions& opts) {
  VertexRelaxation relax = make_vertex_relaxation(tmpl, region);
  require_almost_sure_reachability(support_view(relax.reward_game, tmpl));

  ValueSolution lo = game_value_iteration(relax.reward_game, Role::kMax,
                                          Role::kMin, opts);
  ValueSolution hi = game_value_iteration(relax.reward_game, Role::kMax,
                                          Role::kMax, opts);
  ResultBounds out;
  out.lower.reward = std::max(lo.at(tmpl.entry) - lo.residual, 0.0);
  out.upper.reward = hi.at(tmpl.entry) + hi.residual;
  if (mode == HierarchyMode::kSingleSuccessor) {
    out.lower.exit_probabilities = {1.0};
    out.upper.exit_probabilities = {1.0};
    return out;
  }
  VertexGame reach = relax.reachability_game(success_exit);
  ValueSolution plo = game_value_iteration(reach, Role::kMax, Role::kMin, opts);
  ValueSolution phi = game_value_iteration(reach, Role::kMax, Role::kMax, opts);
  double succ_lo = std::clamp(plo.at(tmpl.entry) - plo.residual, 0.0, 1.0);
  double succ_hi = std::clamp(phi.at(tmpl.entry) + phi.residual, 0.0, 1.0);
  std::size_t y = tmpl.exits.size();
  out.lower.exit_probabilities.assign(y, 0.0);
  out.upper.exit_probabilities.assign(y, 1.0);
  out.lower.exit_probabilities[success_exit] = succ_lo;
  out.upper.exit_probabilities[success_exit] = succ_hi;
  for (std::size_t j = 0; j < y; ++j) {
    if (j == success_exit) continue;
    out.lower.exit_probabilities[j] = 1.0 - succ_hi;
    out.upper.exit_probabilities[j] = 1.0 - succ_lo;
  }
  return out;
}

}  // namespace hmdp
