#include "hmdp/value_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <stack>

#include "hmdp/errors.hpp"

namespace hmdp {

namespace {

// Values beyond this are treated as divergence, far above anything a
// well-posed model can produce but still comfortably inside double range.
constexpr double kDivergenceBound = 1e250;
constexpr double kSelfLoopFloor = 1e-12;

std::vector<bool> forward_reachable(const ConcreteMdp& m) {
  std::vector<bool> seen(m.state_count(), false);
  std::vector<StateId> todo{m.initial};
  seen[m.initial] = true;
  while (!todo.empty()) {
    StateId s = todo.back();
    todo.pop_back();
    for (const auto& row : m.rows[s]) {
      for (const auto& b : row.branches) {
        if (b.probability > 0 && !seen[b.to]) {
          seen[b.to] = true;
          todo.push_back(b.to);
        }
      }
    }
  }
  return seen;
}

/// Iterative Tarjan strongly connected components over an adjacency
/// list restricted to member states. Returns a component id per state
/// (-1 for non-members).
std::vector<std::int64_t> scc_ids(
    StateId n, const std::vector<bool>& member,
    const std::vector<std::vector<StateId>>& adj) {
  std::vector<std::int64_t> comp(n, -1);
  std::vector<std::int64_t> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<StateId> stack;
  std::int64_t next_index = 0, next_comp = 0;

  struct Frame {
    StateId v;
    std::size_t edge;
  };
  for (StateId root = 0; root < n; ++root) {
    if (!member[root] || index[root] != -1) continue;
    std::stack<Frame> frames;
    frames.push({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      Frame& f = frames.top();
      if (f.edge < adj[f.v].size()) {
        StateId w = adj[f.v][f.edge++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          while (true) {
            StateId w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp[w] = next_comp;
            if (w == f.v) break;
          }
          ++next_comp;
        }
        StateId done = f.v;
        frames.pop();
        if (!frames.empty())
          low[frames.top().v] = std::min(low[frames.top().v], low[done]);
      }
    }
  }
  return comp;
}

}  // namespace

void require_almost_sure_reachability(const ConcreteMdp& m) {
  StateId n = m.state_count();
  std::vector<bool> reach = forward_reachable(m);
  // Candidate states for a target-free end component. A state can
  // "stay" with an action whose whole support remains in the candidate
  // set; action-less states stay by being absorbing.
  std::vector<bool> cand(n, false);
  for (StateId s = 0; s < n; ++s) cand[s] = reach[s] && !m.target[s];
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::vector<StateId>> adj(n);
    for (StateId s = 0; s < n; ++s) {
      if (!cand[s]) continue;
      for (const auto& row : m.rows[s]) {
        bool stays = true;
        for (const auto& b : row.branches)
          if (b.probability > 0 && !cand[b.to]) stays = false;
        if (!stays) continue;
        for (const auto& b : row.branches)
          if (b.probability > 0) adj[s].push_back(b.to);
      }
    }
    std::vector<std::int64_t> comp = scc_ids(n, cand, adj);
    for (StateId s = 0; s < n; ++s) {
      if (!cand[s]) continue;
      if (m.rows[s].empty()) continue;  // absorbing, always an end component
      // s survives if some row keeps the whole support inside s's own
      // component; for singleton components that means a pure self-loop.
      bool can_stay = false;
      for (const auto& row : m.rows[s]) {
        bool inside = false;
        for (const auto& b : row.branches) {
          if (b.probability <= 0) continue;
          if (!cand[b.to] || comp[b.to] != comp[s]) {
            inside = false;
            break;
          }
          inside = true;
        }
        if (inside) {
          can_stay = true;
          break;
        }
      }
      if (!can_stay) {
        cand[s] = false;
        changed = true;
      }
    }
  }
  for (StateId s = 0; s < n; ++s) {
    if (cand[s])
      throw DivergentReward(
          "state " + (s < m.state_names.size() ? m.state_names[s]
                                               : std::to_string(s)) +
          " lies in a target-free end component; some policy avoids the "
          "targets with positive probability");
  }
}

namespace {

/// Value of one concrete row given current values, with the self-loop
/// share resolved algebraically: v = (r + sum_{t != s} p*V(t)) / (1 - p_ss).
double row_value(StateId s, double reward,
                 const std::vector<ConcreteMdp::Branch>& branches,
                 const std::vector<double>& values) {
  double self_mass = 0, rest = reward;
  for (const auto& b : branches) {
    if (b.to == s)
      self_mass += b.probability;
    else
      rest += b.probability * values[b.to];
  }
  double denom = 1.0 - self_mass;
  if (denom < kSelfLoopFloor) denom = kSelfLoopFloor;
  return rest / denom;
}

struct SweepStats {
  std::uint64_t iterations{0};
  double residual{0};
};

template <typename Backup>
SweepStats iterate_to_convergence(StateId n, std::vector<double>* values,
                                  const SolveOptions& opts, Backup backup) {
  SweepStats stats;
  while (true) {
    double residual = 0;
    for (StateId s = 0; s < n; ++s) {
      double updated = backup(s, *values);
      residual = std::max(residual, std::abs(updated - (*values)[s]));
      (*values)[s] = updated;
      if (updated > kDivergenceBound)
        throw DivergentReward("value iteration diverged");
    }
    ++stats.iterations;
    stats.residual = residual;
    if (residual <= opts.epsilon) return stats;
    if (stats.iterations >= opts.max_iterations)
      throw IterationCapExceeded(
          "value iteration did not converge within " +
          std::to_string(opts.max_iterations) + " sweeps (residual " +
          std::to_string(residual) + ")");
  }
}

}  // namespace

ValueSolution max_expected_reward(const ConcreteMdp& m,
                                  const SolveOptions& opts) {
  require_almost_sure_reachability(m);
  StateId n = m.state_count();
  ValueSolution out;
  out.values.assign(n, 0.0);
  out.policy.choice.assign(n, -1);
  auto backup = [&](StateId s, const std::vector<double>& values) {
    if (m.target[s] || m.rows[s].empty()) return 0.0;
    double best = -INFINITY;
    for (const auto& row : m.rows[s])
      best = std::max(best, row_value(s, m.rewards[s], row.branches, values));
    return best;
  };
  SweepStats stats = iterate_to_convergence(n, &out.values, opts, backup);
  out.iterations = stats.iterations;
  out.residual = stats.residual;
  for (StateId s = 0; s < n; ++s) {
    if (m.target[s] || m.rows[s].empty()) continue;
    double best = -INFINITY;
    for (std::size_t a = 0; a < m.rows[s].size(); ++a) {
      double v = row_value(s, m.rewards[s], m.rows[s][a].branches, out.values);
      if (v > best) {
        best = v;
        out.policy.choice[s] = static_cast<std::int32_t>(a);
      }
    }
  }
  return out;
}

ValueSolution max_reachability(const ConcreteMdp& m,
                               const std::vector<bool>& goal,
                               const SolveOptions& opts) {
  StateId n = m.state_count();
  ValueSolution out;
  out.values.assign(n, 0.0);
  out.policy.choice.assign(n, -1);
  auto backup = [&](StateId s, const std::vector<double>& values) {
    if (goal[s]) return 1.0;
    if (m.target[s] || m.rows[s].empty()) return 0.0;
    double best = -INFINITY;
    for (const auto& row : m.rows[s])
      best = std::max(best, row_value(s, 0.0, row.branches, values));
    return std::min(best, 1.0);
  };
  SweepStats stats = iterate_to_convergence(n, &out.values, opts, backup);
  out.iterations = stats.iterations;
  out.residual = stats.residual;
  for (StateId s = 0; s < n; ++s) {
    if (goal[s] || m.target[s] || m.rows[s].empty()) continue;
    double best = -INFINITY;
    for (std::size_t a = 0; a < m.rows[s].size(); ++a) {
      double v = row_value(s, 0.0, m.rows[s][a].branches, out.values);
      if (v > best) {
        best = v;
        out.policy.choice[s] = static_cast<std::int32_t>(a);
      }
    }
  }
  return out;
}

namespace {

const ConcreteMdp::Row* induced_row(const ConcreteMdp& m, const Policy& policy,
                                    StateId s) {
  if (m.rows[s].empty()) return nullptr;
  std::int32_t a = s < policy.choice.size() ? policy.choice[s] : -1;
  if (a < 0 || static_cast<std::size_t>(a) >= m.rows[s].size()) a = 0;
  return &m.rows[s][a];
}

}  // namespace

double reachability_probability(const ConcreteMdp& m, const Policy& policy,
                                const std::vector<bool>& goal,
                                const SolveOptions& opts) {
  StateId n = m.state_count();
  std::vector<double> values(n, 0.0);
  auto backup = [&](StateId s, const std::vector<double>& vals) {
    if (goal[s]) return 1.0;
    const ConcreteMdp::Row* row = induced_row(m, policy, s);
    if (m.target[s] || row == nullptr) return 0.0;
    return std::min(row_value(s, 0.0, row->branches, vals), 1.0);
  };
  iterate_to_convergence(n, &values, opts, backup);
  return values[m.initial];
}

VisitResult expected_visits(const ConcreteMdp& m, const Policy& policy,
                            const SolveOptions& opts) {
  StateId n = m.state_count();
  // Incoming edges of the induced chain, from transient states only.
  struct In {
    StateId from;
    double p;
  };
  std::vector<std::vector<In>> inflow(n);
  std::vector<double> self_mass(n, 0.0);
  for (StateId s = 0; s < n; ++s) {
    if (m.target[s]) continue;
    const ConcreteMdp::Row* row = induced_row(m, policy, s);
    if (row == nullptr) continue;
    for (const auto& b : row->branches) {
      if (b.probability <= 0) continue;
      if (b.to == s)
        self_mass[s] += b.probability;
      else
        inflow[b.to].push_back({s, b.probability});
    }
  }
  VisitResult out;
  out.visits.assign(n, 0.0);
  auto backup = [&](StateId s, const std::vector<double>& vis) {
    double sum = s == m.initial ? 1.0 : 0.0;
    for (const In& in : inflow[s]) sum += in.p * vis[in.from];
    double denom = 1.0 - (m.target[s] ? 0.0 : self_mass[s]);
    if (denom < kSelfLoopFloor) denom = kSelfLoopFloor;
    return sum / denom;
  };
  SweepStats stats = iterate_to_convergence(n, &out.visits, opts, backup);
  out.iterations = stats.iterations;
  out.residual = stats.residual;
  return out;
}

ValueSolution game_value_iteration(const VertexGame& game, Role action_role,
                                   Role vertex_role, const SolveOptions& opts) {
  StateId n = game.state_count();
  ValueSolution out;
  out.values.assign(n, 0.0);
  out.policy.choice.assign(n, -1);
  auto resolve = [](Role role, double acc, double v) {
    return role == Role::kMax ? std::max(acc, v) : std::min(acc, v);
  };
  auto action_value = [&](StateId s, const VertexGame::Action& action,
                          const std::vector<double>& values) {
    double acc = vertex_role == Role::kMax ? -INFINITY : INFINITY;
    for (const auto& sub : action.alternatives)
      acc = resolve(vertex_role, acc,
                    row_value(s, sub.reward, sub.branches, values));
    return acc;
  };
  auto backup = [&](StateId s, const std::vector<double>& values) {
    if (game.states[s].empty()) return game.terminal_value[s];
    double acc = action_role == Role::kMax ? -INFINITY : INFINITY;
    for (const auto& action : game.states[s])
      acc = resolve(action_role, acc, action_value(s, action, values));
    return acc;
  };
  SweepStats stats = iterate_to_convergence(n, &out.values, opts, backup);
  out.iterations = stats.iterations;
  out.residual = stats.residual;
  for (StateId s = 0; s < n; ++s) {
    if (game.states[s].empty()) continue;
    double best = action_role == Role::kMax ? -INFINITY : INFINITY;
    for (std::size_t a = 0; a < game.states[s].size(); ++a) {
      double v = action_value(s, game.states[s][a], out.values);
      bool better = action_role == Role::kMax ? v > best : v < best;
      if (better) {
        best = v;
        out.policy.choice[s] = static_cast<std::int32_t>(a);
      }
    }
  }
  return out;
}

}  // namespace hmdp
