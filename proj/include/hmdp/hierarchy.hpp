#pragma once

#include <optional>
#include <vector>

#include "hmdp/model.hpp"
#include "hmdp/robust.hpp"
#include "hmdp/value_iteration.hpp"

namespace hmdp {

/// Macro model with the call results left open: per call state one
/// reward slot and one probability slot per template exit. Assigning
/// exact result vectors recovers the macro MDP; assigning intervals
/// yields the uncertain model the robust engine works on.
struct UncertainMacro {
  struct Entry {
    std::string name;
    bool is_call{false};
    // Concrete states:
    std::vector<ConcreteMdp::Row> rows;
    double reward{0};
    // Call states:
    std::uint32_t call_index{0};
    std::vector<StateId> exits;
  };

  std::vector<Entry> states;
  std::vector<bool> target;
  StateId initial{0};
  std::vector<StateId> calls;            // call index -> macro state id
  std::vector<Valuation> call_valuations;  // call index -> valuation
  HierarchyMode mode{HierarchyMode::kSingleSuccessor};
  std::uint32_t success_exit{0};
  std::uint32_t successor_count{1};

  StateId state_count() const { return static_cast<StateId>(states.size()); }
};

/// Lifts the macro level out of a hierarchical model.
UncertainMacro build_uncertain_macro(const HierarchicalModel& model);

/// Normalizes per-call brackets into the slot assignment the robust
/// engine consumes. Throws CoverageGap when a call has no bracket and
/// SuitabilityViolation when a bracket is empty or has wrong arity.
std::vector<ResultBounds> suitable_region(
    const UncertainMacro& macro,
    const std::vector<std::optional<ResultBounds>>& per_call);

/// The uncertain macro with intervals filled into its slots.
IntervalMdp to_interval_mdp(const UncertainMacro& macro,
                            const std::vector<ResultBounds>& assignment);

/// The macro MDP at exact call results (point slots).
ConcreteMdp instantiate_macro(const UncertainMacro& macro,
                              const std::vector<ResultVector>& per_call);

/// Whether replacing calls by their locally optimal results is exact:
/// one successor per call, a choice-free template, or success-target
/// mode (where local optimality is the modeling assumption).
struct LocalOptimalityReport {
  bool ok{false};
  std::string reason;
  std::vector<StateId> offending_template_states;  // states with choices
};
LocalOptimalityReport check_local_optimality(const HierarchicalModel& model);

struct BaselineResult {
  double value{0};
  Policy macro_policy;
  std::vector<ResultVector> per_call;  // exact call results
};

/// Reference value: exact check_one per distinct call valuation, macro
/// instantiation, one plain solve. Results are shared between calls
/// with identical valuations.
BaselineResult enumerate_baseline(const HierarchicalModel& model,
                                  const SolveOptions& opts = {});

struct FlattenResult {
  double value{0};
  StateId flat_states{0};
  ConcreteMdp flat;
};

/// Splices one instantiated template copy per call state and solves
/// the flat MDP. Throws CapExceeded (before materializing anything)
/// if the flat state count would exceed max_states.
FlattenResult flatten_and_solve(const HierarchicalModel& model,
                                StateId max_states = 10'000'000,
                                const SolveOptions& opts = {});

/// Flat state count without building the model (used by info).
StateId flat_state_count(const HierarchicalModel& model);

}  // namespace hmdp
