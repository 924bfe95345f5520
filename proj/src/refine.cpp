#include "hmdp/refine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

#include "hmdp/errors.hpp"

namespace hmdp {

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Refiner::Refiner(HierarchicalModel model, RefineConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  LocalOptimalityReport rep = check_local_optimality(model_);
  if (!rep.ok && !config_.override_local_optimality)
    throw Error("local optimality cannot be established: " + rep.reason);
  macro_ = build_uncertain_macro(model_);
  std::size_t calls = macro_.calls.size();
  res_.assign(calls, std::nullopt);
  weights_.assign(calls, 1.0);
  ub_ = INFINITY;
  if (calls > 0) {
    TemplateBinding root;
    root.calls.resize(calls);
    for (std::size_t i = 0; i < calls; ++i)
      root.calls[i] = static_cast<std::uint32_t>(i);
    std::uint32_t y = macro_.successor_count;
    root.bounds.lower.exit_probabilities.assign(y, 0.0);
    root.bounds.upper.exit_probabilities.assign(y, 1.0);
    if (model_.mode == HierarchyMode::kSingleSuccessor) {
      root.bounds.lower.exit_probabilities = {1.0};
      root.bounds.upper.exit_probabilities = {1.0};
    }
    root.bounds.lower.reward = 0.0;
    root.bounds.upper.reward = INFINITY;
    queue_.push_back(std::move(root));
  }
}

SolveOptions Refiner::solve_options() const {
  return {config_.epsilon, config_.vi_max_iterations};
}

bool Refiner::gap_open() const {
  if (config_.eta <= 0) return false;
  if (std::isinf(ub_)) return true;
  return config_.eta * ub_ > lb_;
}

double Refiner::priority(const TemplateBinding& b) const {
  double width = b.bounds.upper.reward - b.bounds.lower.reward;
  if (model_.mode == HierarchyMode::kSuccessTarget && std::isfinite(ub_)) {
    std::uint32_t j = model_.success_exit;
    width += (b.bounds.upper.exit_probabilities[j] -
              b.bounds.lower.exit_probabilities[j]) *
             ub_;
  }
  double weight_sum = 0;
  for (std::uint32_t c : b.calls) weight_sum += weights_[c];
  return width * weight_sum;
}

ResultVector Refiner::solve_call(std::uint32_t call) {
  const Valuation& v = macro_.call_valuations[call];
  auto it = memo_.find(v.values);
  if (it == memo_.end()) {
    CheckOneResult r = check_one(model_.tmpl, v, model_.mode,
                                 model_.success_exit, solve_options());
    it = memo_.emplace(v.values, r.result).first;
  }
  return it->second;
}

void Refiner::solve_calls_exactly(const std::vector<std::uint32_t>& calls) {
  // Resolve distinct valuations first so concurrent dispatch shares
  // results and the memo is only touched from this thread.
  std::vector<std::uint32_t> missing;
  for (std::uint32_t c : calls)
    if (!memo_.contains(macro_.call_valuations[c].values))
      missing.push_back(c);
  std::sort(missing.begin(), missing.end(), [&](auto a, auto b) {
    return macro_.call_valuations[a].values < macro_.call_valuations[b].values;
  });
  missing.erase(std::unique(missing.begin(), missing.end(),
                            [&](auto a, auto b) {
                              return macro_.call_valuations[a].values ==
                                     macro_.call_valuations[b].values;
                            }),
                missing.end());
  if (config_.threads > 1 && missing.size() > 1) {
    std::vector<std::future<ResultVector>> jobs;
    jobs.reserve(missing.size());
    for (std::uint32_t c : missing) {
      jobs.push_back(std::async(std::launch::async, [this, c] {
        return check_one(model_.tmpl, macro_.call_valuations[c], model_.mode,
                         model_.success_exit, solve_options())
            .result;
      }));
    }
    for (std::size_t k = 0; k < missing.size(); ++k)
      memo_.emplace(macro_.call_valuations[missing[k]].values, jobs[k].get());
  } else {
    for (std::uint32_t c : missing) solve_call(c);
  }
  for (std::uint32_t c : calls) res_[c] = solve_call(c);
}

void Refiner::pop_and_refine() {
  if (queue_.empty()) throw Error("refinement queue is empty");
  std::size_t best = 0;
  for (std::size_t i = 1; i < queue_.size(); ++i) {
    double pi = priority(queue_[i]), pb = priority(queue_[best]);
    if (pi > pb ||
        (pi == pb &&
         (queue_[i].calls.size() > queue_[best].calls.size() ||
          (queue_[i].calls.size() == queue_[best].calls.size() &&
           queue_[i].calls.front() < queue_[best].calls.front()))))
      best = i;
  }
  TemplateBinding binding = std::move(queue_[best]);
  queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(best));
  ++unreported_refinements_;
  if (binding.calls.size() == 1) {
    solve_calls_exactly(binding.calls);
    return;
  }
  std::vector<Valuation> vals;
  vals.reserve(binding.calls.size());
  for (std::uint32_t c : binding.calls)
    vals.push_back(macro_.call_valuations[c]);
  binding.bounds = bound_results_for_set(model_.tmpl, to_region(vals),
                                         model_.mode, model_.success_exit,
                                         solve_options());
  auto [low, high] = split(binding);
  queue_.push_back(std::move(low));
  queue_.push_back(std::move(high));
}

std::pair<TemplateBinding, TemplateBinding> Refiner::split(
    const TemplateBinding& binding) const {
  if (binding.calls.size() < 2)
    throw Error("cannot split a singleton binding");
  std::vector<Valuation> vals;
  vals.reserve(binding.calls.size());
  for (std::uint32_t c : binding.calls)
    vals.push_back(macro_.call_valuations[c]);
  Region region = to_region(vals);

  // Widest axis relative to the admissible interval of the parameter.
  const Region& box = model_.tmpl.admissible;
  std::size_t axis = 0;
  double best_extent = -1;
  for (std::size_t a = 0; a < region.dimensions(); ++a) {
    double admissible = box.upper[a] - box.lower[a];
    double extent = region.upper[a] - region.lower[a];
    if (admissible > 0) extent /= admissible;
    if (extent > best_extent) {
      best_extent = extent;
      axis = a;
    }
  }

  auto assign = [&](double cut, TemplateBinding* low, TemplateBinding* high) {
    low->calls.clear();
    high->calls.clear();
    for (std::uint32_t c : binding.calls) {
      double v = macro_.call_valuations[c].values[axis];
      (v <= cut ? low : high)->calls.push_back(c);
    }
  };
  TemplateBinding low, high;
  low.bounds = binding.bounds;
  high.bounds = binding.bounds;
  assign(0.5 * (region.lower[axis] + region.upper[axis]), &low, &high);
  if (low.calls.empty() || high.calls.empty()) {
    // Degenerate spread: cut at the median member value instead.
    std::vector<double> values;
    values.reserve(binding.calls.size());
    for (std::uint32_t c : binding.calls)
      values.push_back(macro_.call_valuations[c].values[axis]);
    std::sort(values.begin(), values.end());
    assign(values[(values.size() - 1) / 2], &low, &high);
  }
  if (low.calls.empty() || high.calls.empty()) {
    // All members sit on one point of this axis: halve by index.
    low.calls.clear();
    high.calls.clear();
    std::size_t half = (binding.calls.size() + 1) / 2;
    for (std::size_t k = 0; k < binding.calls.size(); ++k)
      (k < half ? low : high).calls.push_back(binding.calls[k]);
  }
  return {std::move(low), std::move(high)};
}

void Refiner::macro_check() {
  std::vector<std::optional<ResultBounds>> cover(macro_.calls.size());
  for (std::size_t i = 0; i < macro_.calls.size(); ++i)
    if (res_[i]) cover[i] = ResultBounds{*res_[i], *res_[i]};
  for (const TemplateBinding& b : queue_)
    for (std::uint32_t c : b.calls) {
      if (cover[c])
        throw CoverageGap("call " + macro_.states[macro_.calls[c]].name +
                          " is covered twice");
      cover[c] = b.bounds;
    }
  last_assignment_ = suitable_region(macro_, cover);
  RobustBounds rb =
      robust_value_bounds(to_interval_mdp(macro_, last_assignment_),
                          solve_options());
  lb_ = std::max(lb_, rb.lower);
  ub_ = std::min(ub_, rb.upper);
  macro_policy_ = rb.lower_pass.policy;
  unreported_refinements_ = 0;
  std::size_t refined = 0;
  for (const auto& r : res_)
    if (r) ++refined;
  TraceEntry entry{iter_, lb_, ub_, now_ms() - run_started_ms_, queue_.size(),
                   refined};
  trace_.push_back(entry);
  if (on_trace_ && *on_trace_) (*on_trace_)(entry);
}

void Refiner::update_weights() {
  if (last_assignment_.empty() && !macro_.calls.empty()) return;
  std::vector<ResultVector> centers;
  centers.reserve(last_assignment_.size());
  for (const ResultBounds& b : last_assignment_) {
    ResultVector c;
    if (!std::isfinite(b.upper.reward)) return;  // nothing useful yet
    c.reward = 0.5 * (b.lower.reward + b.upper.reward);
    c.exit_probabilities.resize(b.lower.exit_probabilities.size());
    for (std::size_t j = 0; j < c.exit_probabilities.size(); ++j)
      c.exit_probabilities[j] = 0.5 * (b.lower.exit_probabilities[j] +
                                       b.upper.exit_probabilities[j]);
    centers.push_back(std::move(c));
  }
  ConcreteMdp center_model = instantiate_macro(macro_, centers);
  VisitResult visits =
      expected_visits(center_model, macro_policy_, solve_options());
  for (std::size_t i = 0; i < macro_.calls.size(); ++i)
    weights_[i] = visits.visits[macro_.calls[i]];
}

void Refiner::interleave_individual() {
  std::vector<std::uint32_t> remaining;
  for (const TemplateBinding& b : queue_)
    remaining.insert(remaining.end(), b.calls.begin(), b.calls.end());
  if (remaining.empty()) return;
  double percent = 1.0 + static_cast<double>(iter_) / 16.0;
  std::size_t count = static_cast<std::size_t>(
      std::ceil(percent / 100.0 * static_cast<double>(remaining.size())));
  count = std::min(count, static_cast<std::size_t>(config_.interleave_cap));
  count = std::min(count, remaining.size());
  if (count == 0) return;
  std::sort(remaining.begin(), remaining.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              if (weights_[a] != weights_[b]) return weights_[a] > weights_[b];
              return a < b;
            });
  remaining.resize(count);
  solve_calls_exactly(remaining);
  for (TemplateBinding& b : queue_) {
    std::erase_if(b.calls, [&](std::uint32_t c) {
      return std::find(remaining.begin(), remaining.end(), c) !=
             remaining.end();
    });
  }
  std::erase_if(queue_, [](const TemplateBinding& b) {
    return b.calls.empty();
  });
  ++unreported_refinements_;
}

void Refiner::force_bindings(std::vector<TemplateBinding> bindings) {
  queue_ = std::move(bindings);
  ++unreported_refinements_;
}

RefineResult Refiner::run(const TraceCallback& on_trace) {
  on_trace_ = &on_trace;
  run_started_ms_ = now_ms();
  int cadence = std::max(config_.cadence, 1);
  while (gap_open()) {
    if (queue_.empty()) break;
    pop_and_refine();
    ++iter_;
    if (iter_ % cadence == 1 % cadence || queue_.empty()) {
      macro_check();
      update_weights();
      interleave_individual();
    }
    if (gap_open() && !queue_.empty() && iter_ >= config_.max_iterations) {
      on_trace_ = nullptr;
      throw IterationCapExceeded(
          "refinement hit the step cap of " +
          std::to_string(config_.max_iterations) +
          " with the precision target unmet");
    }
  }
  // A closing check so the returned interval reflects every completed
  // refinement (and so eta = 0 still reports one macro analysis).
  if (unreported_refinements_ > 0 || trace_.empty()) macro_check();
  on_trace_ = nullptr;
  RefineResult out;
  out.lb = lb_;
  out.ub = ub_;
  out.iterations = iter_;
  out.macro_policy = macro_policy_;
  out.trace = trace_;
  out.fully_refined = queue_.empty();
  return out;
}

}  // namespace hmdp
