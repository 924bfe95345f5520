#include "hmdp/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hmdp/errors.hpp"
#include "hmdp/lifting.hpp"

namespace hmdp {

UncertainMacro build_uncertain_macro(const HierarchicalModel& model) {
  UncertainMacro out;
  out.target = model.target;
  out.initial = model.initial;
  out.mode = model.mode;
  out.success_exit = model.success_exit;
  out.successor_count = model.tmpl.successor_count();
  out.states.resize(model.state_count());
  for (StateId s = 0; s < model.state_count(); ++s) {
    const auto& ms = model.states[s];
    UncertainMacro::Entry& e = out.states[s];
    e.name = ms.name;
    e.is_call = ms.is_call;
    if (ms.is_call) {
      e.call_index = static_cast<std::uint32_t>(out.calls.size());
      e.exits = ms.exit_wiring;
      out.calls.push_back(s);
      out.call_valuations.push_back(ms.valuation);
    } else {
      e.rows = ms.rows;
      e.reward = ms.reward;
    }
  }
  return out;
}

std::vector<ResultBounds> suitable_region(
    const UncertainMacro& macro,
    const std::vector<std::optional<ResultBounds>>& per_call) {
  if (per_call.size() != macro.calls.size())
    throw CoverageGap("bracket list arity does not match the call count");
  std::vector<ResultBounds> out;
  out.reserve(per_call.size());
  for (std::size_t i = 0; i < per_call.size(); ++i) {
    if (!per_call[i])
      throw CoverageGap("call " + macro.states[macro.calls[i]].name +
                        " has neither an exact result nor a queued bracket");
    const ResultBounds& b = *per_call[i];
    if (b.lower.exit_probabilities.size() != macro.successor_count ||
        b.upper.exit_probabilities.size() != macro.successor_count)
      throw SuitabilityViolation("bracket arity mismatch for call " +
                                 macro.states[macro.calls[i]].name);
    if (b.lower.reward > b.upper.reward + 1e-9)
      throw SuitabilityViolation("empty reward bracket for call " +
                                 macro.states[macro.calls[i]].name);
    for (std::size_t j = 0; j < macro.successor_count; ++j) {
      if (b.lower.exit_probabilities[j] > b.upper.exit_probabilities[j] + 1e-9)
        throw SuitabilityViolation("empty probability bracket for call " +
                                   macro.states[macro.calls[i]].name);
    }
    out.push_back(b);
  }
  return out;
}

IntervalMdp to_interval_mdp(const UncertainMacro& macro,
                            const std::vector<ResultBounds>& assignment) {
  if (assignment.size() != macro.calls.size())
    throw SuitabilityViolation("slot assignment arity mismatch");
  IntervalMdp out;
  StateId n = macro.state_count();
  out.target = macro.target;
  out.initial = macro.initial;
  out.rows.resize(n);
  out.reward_lo.assign(n, 0.0);
  out.reward_hi.assign(n, 0.0);
  out.state_names.resize(n);
  for (StateId s = 0; s < n; ++s) {
    const auto& e = macro.states[s];
    out.state_names[s] = e.name;
    if (macro.target[s]) continue;
    if (e.is_call) {
      const ResultBounds& b = assignment[e.call_index];
      out.reward_lo[s] = b.lower.reward;
      out.reward_hi[s] = b.upper.reward;
      IntervalMdp::IRow row;
      row.action = "exit";
      for (std::size_t j = 0; j < e.exits.size(); ++j)
        row.branches.push_back({e.exits[j], b.lower.exit_probabilities[j],
                                b.upper.exit_probabilities[j]});
      out.rows[s].push_back(std::move(row));
    } else {
      out.reward_lo[s] = e.reward;
      out.reward_hi[s] = e.reward;
      for (const auto& row : e.rows) {
        IntervalMdp::IRow copy;
        copy.action = row.action;
        for (const auto& b : row.branches)
          copy.branches.push_back({b.to, b.probability, b.probability});
        out.rows[s].push_back(std::move(copy));
      }
    }
  }
  return out;
}

ConcreteMdp instantiate_macro(const UncertainMacro& macro,
                              const std::vector<ResultVector>& per_call) {
  if (per_call.size() != macro.calls.size())
    throw SuitabilityViolation("result list arity mismatch");
  ConcreteMdp out;
  StateId n = macro.state_count();
  out.target = macro.target;
  out.initial = macro.initial;
  out.rows.resize(n);
  out.rewards.assign(n, 0.0);
  out.state_names.resize(n);
  for (StateId s = 0; s < n; ++s) {
    const auto& e = macro.states[s];
    out.state_names[s] = e.name;
    if (macro.target[s]) continue;
    if (e.is_call) {
      const ResultVector& r = per_call[e.call_index];
      out.rewards[s] = r.reward;
      ConcreteMdp::Row row;
      row.action = "exit";
      for (std::size_t j = 0; j < e.exits.size(); ++j)
        row.branches.push_back({e.exits[j], r.exit_probabilities[j]});
      out.rows[s].push_back(std::move(row));
    } else {
      out.rewards[s] = e.reward;
      out.rows[s] = e.rows;
    }
  }
  return out;
}

LocalOptimalityReport check_local_optimality(const HierarchicalModel& model) {
  LocalOptimalityReport out;
  if (model.mode == HierarchyMode::kSuccessTarget) {
    out.ok = true;
    out.reason = "success-target mode: local policies are defined as "
                 "maximizing the success exit";
    return out;
  }
  if (model.tmpl.successor_count() == 1) {
    out.ok = true;
    out.reason = "single successor: every policy leaves through the same exit";
    return out;
  }
  if (model.tmpl.core.choice_free()) {
    out.ok = true;
    out.reason = "choice-free template: the local policy is unique";
    return out;
  }
  out.ok = false;
  out.reason =
      "multiple successors and local choices: locally optimal results need "
      "not compose into a globally optimal policy";
  for (StateId s = 0; s < model.tmpl.core.state_count(); ++s)
    if (model.tmpl.core.rows[s].size() > 1)
      out.offending_template_states.push_back(s);
  return out;
}

namespace {

/// check_one per distinct valuation; calls sharing a valuation share
/// one result.
std::vector<ResultVector> solve_calls(const HierarchicalModel& model,
                                      const SolveOptions& opts) {
  UncertainMacro macro = build_uncertain_macro(model);
  std::map<std::vector<double>, ResultVector> memo;
  std::vector<ResultVector> out;
  out.reserve(macro.calls.size());
  for (const Valuation& v : macro.call_valuations) {
    auto it = memo.find(v.values);
    if (it == memo.end()) {
      CheckOneResult r =
          check_one(model.tmpl, v, model.mode, model.success_exit, opts);
      it = memo.emplace(v.values, r.result).first;
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

BaselineResult enumerate_baseline(const HierarchicalModel& model,
                                  const SolveOptions& opts) {
  UncertainMacro macro = build_uncertain_macro(model);
  BaselineResult out;
  out.per_call = solve_calls(model, opts);
  ConcreteMdp instance = instantiate_macro(macro, out.per_call);
  ValueSolution sol = max_expected_reward(instance, opts);
  out.value = sol.at(instance.initial);
  out.macro_policy = sol.policy;
  return out;
}

StateId flat_state_count(const HierarchicalModel& model) {
  StateId block = model.tmpl.core.state_count() -
                  static_cast<StateId>(model.tmpl.exits.size());
  StateId count = 0;
  for (StateId s = 0; s < model.state_count(); ++s)
    count += model.states[s].is_call ? block : 1;
  return count;
}

FlattenResult flatten_and_solve(const HierarchicalModel& model,
                                StateId max_states, const SolveOptions& opts) {
  StateId total = flat_state_count(model);
  if (total > max_states)
    throw CapExceeded("flattening would create " + std::to_string(total) +
                      " states, above the cap of " +
                      std::to_string(max_states));
  const TemplateModel& tmpl = model.tmpl;
  StateId tn = tmpl.core.state_count();
  std::vector<bool> is_exit(tn, false);
  for (StateId e : tmpl.exits) is_exit[e] = true;

  FlattenResult out;
  ConcreteMdp& flat = out.flat;
  flat.rows.reserve(total);

  // First pass: assign flat ids. Calls own one id per non-exit
  // template state; concrete macro states map one-to-one.
  std::vector<StateId> macro_base(model.state_count(), kNoState);
  std::vector<StateId> tmpl_offset(tn, kNoState);  // per-call layout, shared
  {
    StateId next = 0;
    for (StateId t = 0; t < tn; ++t)
      if (!is_exit[t]) tmpl_offset[t] = next++;
  }
  StateId block = tn - static_cast<StateId>(tmpl.exits.size());
  {
    StateId next = 0;
    for (StateId s = 0; s < model.state_count(); ++s) {
      macro_base[s] = next;
      next += model.states[s].is_call ? block : 1;
    }
  }

  // Where a flat edge into macro state s should land: concrete states
  // map to themselves, calls to their template entry copy.
  auto macro_landing = [&](StateId s) {
    return model.states[s].is_call
               ? macro_base[s] + tmpl_offset[tmpl.entry]
               : macro_base[s];
  };

  flat.rows.resize(total);
  flat.rewards.assign(total, 0.0);
  flat.target.assign(total, false);
  flat.state_names.resize(total);

  std::map<std::vector<double>, ConcreteMdp> instance_memo;
  for (StateId s = 0; s < model.state_count(); ++s) {
    const auto& ms = model.states[s];
    if (!ms.is_call) {
      StateId id = macro_base[s];
      flat.state_names[id] = ms.name;
      flat.target[id] = model.target[s];
      flat.rewards[id] = model.target[s] ? 0.0 : ms.reward;
      for (const auto& row : ms.rows) {
        ConcreteMdp::Row copy;
        copy.action = row.action;
        for (const auto& b : row.branches)
          copy.branches.push_back({macro_landing(b.to), b.probability});
        flat.rows[id].push_back(std::move(copy));
      }
      continue;
    }
    auto it = instance_memo.find(ms.valuation.values);
    if (it == instance_memo.end())
      it = instance_memo
               .emplace(ms.valuation.values,
                        instantiate(tmpl.core, ms.valuation))
               .first;
    const ConcreteMdp& inst = it->second;
    // Branch targets inside the copy; template exits land on the wired
    // macro successors instead of fresh states.
    auto landing = [&](StateId t) -> StateId {
      if (!is_exit[t]) return macro_base[s] + tmpl_offset[t];
      for (std::size_t j = 0; j < tmpl.exits.size(); ++j)
        if (tmpl.exits[j] == t) return macro_landing(ms.exit_wiring[j]);
      return kNoState;
    };
    for (StateId t = 0; t < tn; ++t) {
      if (is_exit[t]) continue;
      StateId id = macro_base[s] + tmpl_offset[t];
      flat.state_names[id] = ms.name + "." + tmpl.core.state_names[t];
      flat.rewards[id] = inst.rewards[t];
      for (const auto& row : inst.rows[t]) {
        ConcreteMdp::Row copy;
        copy.action = row.action;
        for (const auto& b : row.branches)
          copy.branches.push_back({landing(b.to), b.probability});
        flat.rows[id].push_back(std::move(copy));
      }
    }
  }
  flat.initial = macro_landing(model.initial);
  out.flat_states = total;
  ValueSolution sol = max_expected_reward(flat, opts);
  out.value = sol.at(flat.initial);
  return out;
}

}  // namespace hmdp
