#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "hmdp/hierarchy.hpp"
#include "hmdp/lifting.hpp"
#include "hmdp/model.hpp"

namespace hmdp {

struct RefineConfig {
  double eta{0.9};        // stop once eta * ub <= lb
  double epsilon{1e-8};   // engine precision
  std::uint64_t vi_max_iterations{1'000'000};
  int cadence{8};         // macro check every cadence-th refinement
  std::uint64_t max_iterations{1'000'000};  // refinement step cap
  int interleave_cap{150};
  unsigned threads{1};    // concurrent individual checks per round
  bool override_local_optimality{false};
};

/// Queue entry: a set of call indices analysed together over the
/// smallest box around their valuations, with the latest bracket
/// computed for that box (children inherit it until rechecked).
struct TemplateBinding {
  std::vector<std::uint32_t> calls;  // sorted call indices
  ResultBounds bounds;
};

struct TraceEntry {
  std::uint64_t iter{0};
  double lb{0};
  double ub{0};
  double wall_ms{0};
  std::size_t queue_size{0};
  std::size_t refined_count{0};
};

using TraceCallback = std::function<void(const TraceEntry&)>;

struct RefineResult {
  double lb{0};
  double ub{0};
  std::uint64_t iterations{0};
  Policy macro_policy;
  std::vector<TraceEntry> trace;
  bool fully_refined{false};  // queue exhausted, every call solved exactly
};

/// Anytime refinement: repeatedly tightens per-call brackets (set
/// bounds over shrinking regions, exact checks for singletons and
/// high-weight calls) and folds them into macro-level bounds through
/// the robust engine. The [lb, ub] envelope only ever narrows and
/// always contains the hierarchical value.
class Refiner {
 public:
  Refiner(HierarchicalModel model, RefineConfig config);

  /// Runs until eta * ub <= lb or the queue is exhausted. Throws
  /// IterationCapExceeded when the step cap is hit first (the trace
  /// collected so far stays available).
  RefineResult run(const TraceCallback& on_trace = nullptr);

  // The individual steps are exposed so tests can drive or force
  // particular refinement states.
  void pop_and_refine();
  std::pair<TemplateBinding, TemplateBinding> split(
      const TemplateBinding& binding) const;
  void macro_check();
  void update_weights();
  void interleave_individual();
  /// Replaces the queue wholesale (bounds must be filled in).
  void force_bindings(std::vector<TemplateBinding> bindings);

  double lb() const { return lb_; }
  double ub() const { return ub_; }
  std::uint64_t iterations() const { return iter_; }
  const std::vector<TemplateBinding>& queue() const { return queue_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::optional<ResultVector>>& solved() const {
    return res_;
  }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  const Policy& macro_policy() const { return macro_policy_; }

 private:
  double priority(const TemplateBinding& b) const;
  ResultVector solve_call(std::uint32_t call);
  void solve_calls_exactly(const std::vector<std::uint32_t>& calls);
  bool gap_open() const;
  SolveOptions solve_options() const;

  HierarchicalModel model_;
  RefineConfig config_;
  UncertainMacro macro_;
  std::vector<std::optional<ResultVector>> res_;
  std::vector<TemplateBinding> queue_;
  std::vector<double> weights_;
  std::map<std::vector<double>, ResultVector> memo_;
  std::vector<ResultBounds> last_assignment_;
  double lb_{0};
  double ub_{0};
  std::uint64_t iter_{0};
  std::uint64_t unreported_refinements_{0};
  Policy macro_policy_;
  std::vector<TraceEntry> trace_;
  const TraceCallback* on_trace_{nullptr};
  double run_started_ms_{0};
};

}  // namespace hmdp
