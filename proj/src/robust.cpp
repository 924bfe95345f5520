#include "hmdp/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hmdp/errors.hpp"

namespace hmdp {

namespace {

constexpr double kFeasTol = 1e-9;

void check_feasible(const IntervalMdp& m) {
  for (StateId s = 0; s < m.state_count(); ++s) {
    if (m.reward_lo[s] > m.reward_hi[s] + kFeasTol)
      throw SuitabilityViolation("reward interval of state " +
                                 m.state_names[s] + " is empty");
    for (const auto& row : m.rows[s]) {
      double lo_sum = 0, hi_sum = 0;
      for (const auto& b : row.branches) {
        if (b.lo > b.hi + kFeasTol)
          throw SuitabilityViolation("probability interval of state " +
                                     m.state_names[s] + ", action " +
                                     row.action + " is empty");
        if (b.lo < -kFeasTol || b.hi > 1 + kFeasTol)
          throw SuitabilityViolation("probability interval of state " +
                                     m.state_names[s] + ", action " +
                                     row.action + " leaves [0, 1]");
        lo_sum += b.lo;
        hi_sum += b.hi;
      }
      if (lo_sum > 1 + kFeasTol || hi_sum < 1 - kFeasTol)
        throw SuitabilityViolation(
            "no distribution fits the row intervals of state " +
            m.state_names[s] + ", action " + row.action);
    }
  }
}

/// Precheck on the optimistic support (every branch with hi > 0).
/// Adversarial support narrowing is additionally caught at runtime by
/// the divergence guard of the iteration itself.
void check_targets_reachable(const IntervalMdp& m) {
  ConcreteMdp support;
  support.state_names = m.state_names;
  support.target = m.target;
  support.initial = m.initial;
  support.rewards.assign(m.state_count(), 0.0);
  support.rows.resize(m.state_count());
  for (StateId s = 0; s < m.state_count(); ++s) {
    for (const auto& row : m.rows[s]) {
      ConcreteMdp::Row copy;
      copy.action = row.action;
      for (const auto& b : row.branches)
        if (b.hi > 0) copy.branches.push_back({b.to, 1.0});
      support.rows[s].push_back(std::move(copy));
    }
  }
  require_almost_sure_reachability(support);
}

/// Extremal value of sum p(b) * V(b.to) over stochastic vectors inside
/// the branch intervals: start from the lower ends and shift the
/// remaining mass onto branches in value order (ascending to minimize,
/// descending to maximize). Exact for rectangular rows.
double nature_optimum(const std::vector<IntervalMdp::IBranch>& branches,
                      const std::vector<double>& values, bool minimize) {
  thread_local std::vector<std::size_t> order;
  order.resize(branches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double va = values[branches[a].to], vb = values[branches[b].to];
    if (va != vb) return minimize ? va < vb : va > vb;
    return a < b;
  });
  double slack = 1.0;
  for (const auto& b : branches) slack -= b.lo;
  double sum = 0;
  for (std::size_t idx : order) {
    const auto& b = branches[idx];
    double p = std::clamp(b.lo, 0.0, 1.0);
    double add = std::min(std::max(b.hi - b.lo, 0.0), std::max(slack, 0.0));
    p += add;
    slack -= add;
    sum += p * values[b.to];
  }
  return sum;
}

bool row_is_exact(const IntervalMdp::IRow& row) {
  for (const auto& b : row.branches)
    if (b.lo != b.hi) return false;
  return true;
}

ValueSolution solve_pass(const IntervalMdp& m, bool optimistic,
                         const SolveOptions& opts) {
  StateId n = m.state_count();
  const std::vector<double>& reward =
      optimistic ? m.reward_hi : m.reward_lo;
  constexpr double kDivergenceBound = 1e250;
  constexpr double kSelfLoopFloor = 1e-12;

  auto row_val = [&](StateId s, const IntervalMdp::IRow& row,
                     const std::vector<double>& values) {
    if (row_is_exact(row)) {
      // Exact rows get the algebraic self-loop resolution.
      double self_mass = 0, rest = reward[s];
      for (const auto& b : row.branches) {
        if (b.to == s)
          self_mass += b.lo;
        else
          rest += b.lo * values[b.to];
      }
      double denom = 1.0 - self_mass;
      if (denom < kSelfLoopFloor) denom = kSelfLoopFloor;
      return rest / denom;
    }
    return reward[s] + nature_optimum(row.branches, values, !optimistic);
  };

  ValueSolution out;
  out.values.assign(n, 0.0);
  out.policy.choice.assign(n, -1);
  std::uint64_t iterations = 0;
  while (true) {
    double residual = 0;
    for (StateId s = 0; s < n; ++s) {
      if (m.target[s] || m.rows[s].empty()) continue;
      double best = -INFINITY;
      for (const auto& row : m.rows[s])
        best = std::max(best, row_val(s, row, out.values));
      residual = std::max(residual, std::abs(best - out.values[s]));
      out.values[s] = best;
      if (best > kDivergenceBound)
        throw DivergentReward("robust value iteration diverged; the upper "
                              "reward bound is not finite over the intervals");
    }
    ++iterations;
    out.iterations = iterations;
    out.residual = residual;
    if (residual <= opts.epsilon) break;
    if (iterations >= opts.max_iterations)
      throw IterationCapExceeded(
          "robust value iteration did not converge within " +
          std::to_string(opts.max_iterations) + " sweeps");
  }
  for (StateId s = 0; s < n; ++s) {
    if (m.target[s] || m.rows[s].empty()) continue;
    double best = -INFINITY;
    for (std::size_t a = 0; a < m.rows[s].size(); ++a) {
      double v = row_val(s, m.rows[s][a], out.values);
      if (v > best) {
        best = v;
        out.policy.choice[s] = static_cast<std::int32_t>(a);
      }
    }
  }
  return out;
}

}  // namespace

RobustBounds robust_value_bounds(const IntervalMdp& m,
                                 const SolveOptions& opts) {
  check_feasible(m);
  check_targets_reachable(m);
  RobustBounds out;
  out.lower_pass = solve_pass(m, /*optimistic=*/false, opts);
  out.lower = std::max(out.lower_pass.at(m.initial) - out.lower_pass.residual,
                       0.0);
  bool finite_upper = true;
  for (StateId s = 0; s < m.state_count(); ++s)
    if (!m.target[s] && !std::isfinite(m.reward_hi[s])) finite_upper = false;
  if (!finite_upper) {
    out.upper = INFINITY;
    out.upper_pass.values.assign(m.state_count(), INFINITY);
    out.upper_pass.policy.choice.assign(m.state_count(), -1);
    return out;
  }
  out.upper_pass = solve_pass(m, /*optimistic=*/true, opts);
  out.upper = out.upper_pass.at(m.initial) + out.upper_pass.residual;
  return out;
}

}  // namespace hmdp
