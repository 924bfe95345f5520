#include "hmdp/model.hpp"

#include <algorithm>
#include <cmath>

#include "hmdp/errors.hpp"

namespace hmdp {

namespace {

constexpr double kProbTol = 1e-9;

std::string state_location(const Pmdp& m, StateId s) {
  return "state " + m.state_names[s];
}

std::string row_location(const Pmdp& m, StateId s, const Pmdp::Row& row) {
  return "state " + m.state_names[s] + ", action " + row.action;
}

}  // namespace

bool Region::contains(const Valuation& v, double tol) const {
  if (v.values.size() != lower.size()) return false;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (v.values[i] < lower[i] - tol || v.values[i] > upper[i] + tol)
      return false;
  }
  return true;
}

bool Region::contains(const Region& inner, double tol) const {
  if (inner.lower.size() != lower.size()) return false;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (inner.lower[i] < lower[i] - tol || inner.upper[i] > upper[i] + tol)
      return false;
  }
  return true;
}

bool Pmdp::choice_free() const {
  for (const auto& state_rows : rows)
    if (state_rows.size() > 1) return false;
  return true;
}

std::vector<StateId> HierarchicalModel::call_states() const {
  std::vector<StateId> out;
  for (StateId s = 0; s < state_count(); ++s)
    if (states[s].is_call) out.push_back(s);
  return out;
}

ConcreteMdp instantiate(const Pmdp& model, const Valuation& valuation) {
  if (valuation.values.size() != model.params.size())
    throw NotWellDefined("valuation arity does not match parameter count");
  ConcreteMdp out;
  out.state_names = model.state_names;
  out.target = model.target;
  out.initial = model.initial;
  out.rows.resize(model.rows.size());
  out.rewards.reserve(model.rewards.size());
  for (StateId s = 0; s < model.state_count(); ++s) {
    double r = model.rewards[s].evaluate(valuation.values);
    if (r < -kProbTol)
      throw NotWellDefined("negative reward at " + state_location(model, s));
    out.rewards.push_back(std::max(r, 0.0));
  }
  for (StateId s = 0; s < model.state_count(); ++s) {
    for (const Pmdp::Row& row : model.rows[s]) {
      ConcreteMdp::Row copy;
      copy.action = row.action;
      double sum = 0;
      for (const Pmdp::Branch& b : row.branches) {
        double p = b.probability.evaluate(valuation.values);
        if (p < -kProbTol || p > 1 + kProbTol)
          throw NotWellDefined("probability " + std::to_string(p) +
                               " out of range at " +
                               row_location(model, s, row));
        sum += p;
        copy.branches.push_back({b.to, p});
      }
      if (std::abs(sum - 1.0) > 1e-7)
        throw NotWellDefined("row does not sum to 1 at " +
                             row_location(model, s, row));
      out.rows[s].push_back(std::move(copy));
    }
  }
  return out;
}

std::vector<Diagnostic> validate(const Pmdp& model) {
  std::vector<Diagnostic> out;
  StateId n = model.state_count();
  if (model.rows.size() != n || model.rewards.size() != n ||
      model.target.size() != n) {
    out.push_back({"model", "state-indexed vectors have inconsistent sizes"});
    return out;
  }
  if (model.initial >= n)
    out.push_back({"model", "initial state out of range"});
  for (StateId s = 0; s < n; ++s) {
    for (const Pmdp::Row& row : model.rows[s]) {
      if (row.branches.empty()) {
        out.push_back({row_location(model, s, row), "row has no branches"});
        continue;
      }
      MultilinearExpr sum;
      bool in_range = true;
      for (const Pmdp::Branch& b : row.branches) {
        if (b.to >= n) {
          out.push_back({row_location(model, s, row),
                         "branch leads to an unknown state"});
          in_range = false;
          continue;
        }
        sum = sum + b.probability;
      }
      auto c = sum.as_constant();
      if (in_range && (!c || !c->is_one()))
        out.push_back({row_location(model, s, row),
                       "branch probabilities do not sum to 1 (got " +
                           sum.to_string(model.params) + ")"});
    }
  }
  return out;
}

namespace {

/// Range checks for probabilities and rewards over a box, shared by
/// template validation and region admission.
void check_ranges_over(const TemplateModel& tmpl, const Region& box,
                       std::vector<Diagnostic>* diags) {
  const Pmdp& m = tmpl.core;
  for (StateId s = 0; s < m.state_count(); ++s) {
    Interval r = m.rewards[s].bounds_over(box.lower, box.upper);
    if (r.lo < -kProbTol)
      diags->push_back({state_location(m, s),
                        "reward can become negative over the parameter box"});
    for (const Pmdp::Row& row : m.rows[s]) {
      for (const Pmdp::Branch& b : row.branches) {
        if (b.probability.is_zero()) continue;
        Interval p = b.probability.bounds_over(box.lower, box.upper);
        if (p.lo < -kProbTol || p.hi > 1 + kProbTol)
          diags->push_back({row_location(m, s, row),
                            "branch probability leaves [0, 1] over the box"});
      }
    }
  }
}

}  // namespace

std::vector<Diagnostic> validate(const TemplateModel& tmpl) {
  std::vector<Diagnostic> out = validate(tmpl.core);
  const Pmdp& m = tmpl.core;
  if (tmpl.entry >= m.state_count()) {
    out.push_back({"template", "entry state out of range"});
    return out;
  }
  if (tmpl.exits.empty())
    out.push_back({"template", "no exit states declared"});
  for (StateId e : tmpl.exits) {
    if (e >= m.state_count()) {
      out.push_back({"template", "exit state out of range"});
      continue;
    }
    if (!m.rows[e].empty())
      out.push_back({state_location(m, e),
                     "exit states stand for successors and take no actions"});
    if (!m.target[e])
      out.push_back({state_location(m, e),
                     "exit state not marked as analysis target"});
    auto c = m.rewards[e].as_constant();
    if (!c || !c->is_zero())
      out.push_back({state_location(m, e), "exit states carry no reward"});
  }
  for (StateId s = 0; s < m.state_count(); ++s) {
    bool is_exit = std::find(tmpl.exits.begin(), tmpl.exits.end(), s) !=
                   tmpl.exits.end();
    if (!is_exit && m.rows[s].empty())
      out.push_back({state_location(m, s),
                     "non-exit state has no enabled action"});
    if (!is_exit && m.target[s])
      out.push_back({state_location(m, s),
                     "only exit states may be analysis targets"});
  }
  if (tmpl.admissible.lower.size() != m.params.size() ||
      tmpl.admissible.upper.size() != m.params.size()) {
    out.push_back({"template", "admissible box arity mismatch"});
    return out;
  }
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (tmpl.admissible.lower[i] > tmpl.admissible.upper[i])
      out.push_back({"parameter " + m.params[i],
                     "admissible interval has lower > upper"});
  }
  if (out.empty()) check_ranges_over(tmpl, tmpl.admissible, &out);
  return out;
}

std::vector<Diagnostic> validate(const HierarchicalModel& model) {
  std::vector<Diagnostic> out = validate(model.tmpl);
  StateId n = model.state_count();
  if (model.target.size() != n) {
    out.push_back({"macro", "target vector size mismatch"});
    return out;
  }
  if (model.initial >= n) out.push_back({"macro", "initial state out of range"});
  std::uint32_t y = model.tmpl.successor_count();
  if (model.mode == HierarchyMode::kSingleSuccessor && y != 1)
    out.push_back({"macro", "single-successor mode requires exactly one "
                            "template exit, found " + std::to_string(y)});
  if (model.mode == HierarchyMode::kSuccessTarget) {
    if (y != 2)
      out.push_back({"macro", "success-target mode requires exactly two "
                              "template exits, found " + std::to_string(y)});
    if (model.success_exit >= y)
      out.push_back({"macro", "success exit index out of range"});
  }
  for (StateId s = 0; s < n; ++s) {
    const auto& ms = model.states[s];
    std::string where = "macro state " + ms.name;
    if (ms.is_call) {
      if (model.target[s])
        out.push_back({where, "call states cannot be targets"});
      if (ms.exit_wiring.size() != y)
        out.push_back({where, "exit wiring names " +
                                  std::to_string(ms.exit_wiring.size()) +
                                  " successors, template has " +
                                  std::to_string(y) + " exits"});
      for (StateId t : ms.exit_wiring)
        if (t >= n) out.push_back({where, "exit wiring leads out of range"});
      if (ms.valuation.values.size() != model.tmpl.core.params.size())
        out.push_back({where, "call valuation arity mismatch"});
      else if (!model.tmpl.admissible.contains(ms.valuation))
        out.push_back({where,
                       "call valuation outside the admissible parameter box"});
    } else {
      if (ms.rows.empty() && !model.target[s])
        out.push_back({where, "non-target concrete state has no actions"});
      if (ms.reward < -kProbTol)
        out.push_back({where, "negative reward"});
      for (const auto& row : ms.rows) {
        double sum = 0;
        for (const auto& b : row.branches) {
          if (b.to >= n) {
            out.push_back({where + ", action " + row.action,
                           "branch leads out of range"});
            continue;
          }
          if (b.probability < -kProbTol || b.probability > 1 + kProbTol)
            out.push_back({where + ", action " + row.action,
                           "branch probability out of range"});
          sum += b.probability;
        }
        if (std::abs(sum - 1.0) > 1e-7)
          out.push_back({where + ", action " + row.action,
                         "branch probabilities sum to " + std::to_string(sum) +
                             ", expected 1"});
      }
    }
  }
  return out;
}

void require_graph_preserving(const TemplateModel& tmpl, const Region& region) {
  const Pmdp& m = tmpl.core;
  if (region.lower.size() != m.params.size())
    throw GraphChange("region arity does not match the template parameters");
  if (!tmpl.admissible.contains(region))
    throw GraphChange("region leaves the admissible parameter box");
  std::vector<Diagnostic> diags;
  check_ranges_over(tmpl, region, &diags);
  if (!diags.empty())
    throw NotWellDefined(diags.front().where + ": " + diags.front().message);
  for (StateId s = 0; s < m.state_count(); ++s) {
    for (const Pmdp::Row& row : m.rows[s]) {
      for (const Pmdp::Branch& b : row.branches) {
        if (b.probability.is_zero()) continue;
        Interval p = b.probability.bounds_over(region.lower, region.upper);
        if (p.lo <= kProbTol)
          throw GraphChange(
              "support of " + row_location(m, s, row) +
              " changes inside the region (a branch probability can reach 0)");
      }
    }
  }
}

}  // namespace hmdp
