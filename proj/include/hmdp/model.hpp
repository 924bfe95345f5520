#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmdp/expr.hpp"

namespace hmdp {

using StateId = std::uint32_t;
inline constexpr StateId kNoState = static_cast<StateId>(-1);

/// One value per model parameter, in parameter declaration order.
struct Valuation {
  std::vector<double> values;
  bool operator==(const Valuation&) const = default;
};

/// Axis-aligned box of parameter values, one interval per parameter.
struct Region {
  std::vector<double> lower;
  std::vector<double> upper;

  static Region point(const Valuation& v) { return {v.values, v.values}; }
  std::size_t dimensions() const { return lower.size(); }
  bool contains(const Valuation& v, double tol = 1e-9) const;
  bool contains(const Region& inner, double tol = 1e-9) const;
  bool operator==(const Region&) const = default;
};

/// Memoryless deterministic policy: chosen action index per state,
/// -1 where no choice has been made (targets, unreached states).
struct Policy {
  std::vector<std::int32_t> choice;
  bool operator==(const Policy&) const = default;
};

/// Analysis result for one subMDP: probability of leaving through each
/// exit (in template exit order) and the expected reward collected
/// until leaving. Exit probabilities of an exact result sum to one.
struct ResultVector {
  std::vector<double> exit_probabilities;
  double reward{0};
};

/// Component-wise bracket around the result vectors of a whole region.
struct ResultBounds {
  ResultVector lower;
  ResultVector upper;
};

/// A finding of validate(); where names a state, action or header.
struct Diagnostic {
  std::string where;
  std::string message;
};

/// Parameter-free MDP with plain numeric probabilities and rewards.
/// This is what instantiate() produces and the engines consume.
struct ConcreteMdp {
  struct Branch {
    StateId to{kNoState};
    double probability{0};
  };
  struct Row {
    std::string action;
    std::vector<Branch> branches;
  };

  std::vector<std::string> state_names;
  std::vector<std::vector<Row>> rows;    // per state; empty = absorbing
  std::vector<double> rewards;
  std::vector<bool> target;
  StateId initial{0};

  StateId state_count() const { return static_cast<StateId>(rows.size()); }
};

/// Markov decision process whose transition probabilities and state
/// rewards are multilinear expressions over a shared parameter list.
/// States with an empty action list are absorbing.
struct Pmdp {
  struct Branch {
    StateId to{kNoState};
    MultilinearExpr probability;
  };
  struct Row {
    std::string action;
    std::vector<Branch> branches;
  };

  std::vector<std::string> state_names;
  std::vector<std::vector<Row>> rows;    // per state, action order = file order
  std::vector<MultilinearExpr> rewards;  // per state
  std::vector<bool> target;              // per state
  StateId initial{0};
  std::vector<std::string> params;

  StateId state_count() const { return static_cast<StateId>(state_names.size()); }
  bool parameter_free() const { return params.empty(); }
  /// True if every state has at most one enabled action.
  bool choice_free() const;
};

/// The shared subMDP template: a pMDP with a designated entry state,
/// ordered exit states (stand-ins for the successor states of a block,
/// absorbing and reward-free), and the admissible parameter box.
struct TemplateModel {
  Pmdp core;  // core.target marks the exits for analysis
  StateId entry{0};
  std::vector<StateId> exits;
  Region admissible;

  std::uint32_t successor_count() const {
    return static_cast<std::uint32_t>(exits.size());
  }
};

enum class HierarchyMode {
  kSingleSuccessor,  // every call has one successor, reached with probability 1
  kSuccessTarget,    // two successors; local policies maximize the success exit
};

/// Macro-level model: concrete states carry ordinary constant
/// distributions; call states stand for one template instance each and
/// hand control to their wired successor states when the instance ends.
struct HierarchicalModel {
  struct MacroState {
    std::string name;
    bool is_call{false};
    // Concrete states only:
    std::vector<ConcreteMdp::Row> rows;
    double reward{0};
    // Call states only:
    Valuation valuation;
    std::vector<StateId> exit_wiring;  // one successor per template exit
  };

  std::vector<MacroState> states;
  std::vector<bool> target;
  StateId initial{0};
  TemplateModel tmpl;
  HierarchyMode mode{HierarchyMode::kSingleSuccessor};
  std::uint32_t success_exit{0};  // index into tmpl.exits, success-target mode

  StateId state_count() const { return static_cast<StateId>(states.size()); }
  /// Ids of all call states, in state order.
  std::vector<StateId> call_states() const;
};

/// Substitutes a full valuation. Throws NotWellDefined if a row fails
/// to sum to 1 or probabilities/rewards leave their ranges at the point.
ConcreteMdp instantiate(const Pmdp& model, const Valuation& valuation);

/// Structural and well-definedness checks. Returns an empty list for a
/// usable model; findings carry human-readable locations.
std::vector<Diagnostic> validate(const Pmdp& model);
std::vector<Diagnostic> validate(const TemplateModel& tmpl);
std::vector<Diagnostic> validate(const HierarchicalModel& model);

/// Throws GraphChange if some transition of the template can reach
/// probability <= 0 inside the region (support would change) or the
/// region leaves the admissible box, and NotWellDefined if rewards can
/// become negative over the region.
void require_graph_preserving(const TemplateModel& tmpl, const Region& region);

}  // namespace hmdp
