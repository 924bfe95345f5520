#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hmdp/errors.hpp"
#include "hmdp/generate.hpp"
#include "hmdp/hierarchy.hpp"
#include "hmdp/parse.hpp"
#include "hmdp/refine.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;   // unreadable or invalid model input
constexpr int kExitEngine = 2;  // analysis failed or ran out of budget

nlohmann::json trace_to_json(const std::vector<hmdp::TraceEntry>& trace) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : trace) {
    arr.push_back({{"iter", t.iter},
                   {"lb", t.lb},
                   {"ub", t.ub},
                   {"wall_ms", t.wall_ms},
                   {"queue_size", t.queue_size},
                   {"refined_count", t.refined_count}});
  }
  return arr;
}

void write_trace(const std::string& path,
                 const std::vector<hmdp::TraceEntry>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hmdp::Error("cannot write trace file " + path);
  out << trace_to_json(trace).dump(2) << "\n";
}

hmdp::Bundle load_checked(const std::string& path) {
  hmdp::Bundle bundle;
  try {
    bundle = hmdp::load_bundle(path);
  } catch (const hmdp::ParseError& e) {
    std::cerr << "error: line " << e.line << ", column " << e.column << ": "
              << e.what() << "\n";
    std::exit(kExitInput);
  } catch (const hmdp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::exit(kExitInput);
  }
  auto diags = hmdp::validate(bundle.model);
  if (!diags.empty()) {
    for (const auto& d : diags)
      std::cerr << "error: " << d.where << ": " << d.message << "\n";
    std::exit(kExitInput);
  }
  return bundle;
}

std::string mode_name(const hmdp::HierarchicalModel& model) {
  return model.mode == hmdp::HierarchyMode::kSuccessTarget ? "success-target"
                                                           : "single";
}

void check_mode_flag(const hmdp::HierarchicalModel& model,
                     const std::string& flag) {
  if (flag.empty()) return;
  if (flag != mode_name(model)) {
    std::cerr << "error: --mode " << flag << " does not match the bundle ("
              << mode_name(model) << ")\n";
    std::exit(kExitInput);
  }
}

int run_gen(const std::string& family, const std::string& out_dir,
            unsigned depth, unsigned breadth, unsigned template_length,
            std::uint64_t seed) {
  hmdp::HierarchicalModel model;
  if (family == "token") {
    model = hmdp::make_token_model();
  } else if (family == "chain-grid") {
    model = hmdp::make_chain_grid(depth, breadth, template_length, seed);
  } else {
    std::cerr << "error: unknown family '" << family
              << "' (expected token or chain-grid)\n";
    return kExitInput;
  }
  hmdp::RunDefaults defaults;
  defaults.seed = static_cast<unsigned>(seed);
  hmdp::write_bundle(out_dir, model, defaults);
  std::cout << "wrote " << out_dir << "/bundle.json ("
            << model.state_count() << " macro states, "
            << hmdp::flat_state_count(model) << " flat states)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical MDP analysis: anytime bounds on maximal "
               "expected rewards via template abstraction"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a model bundle");
  std::string family;
  std::string out_dir = "model";
  unsigned depth = 3, breadth = 3, template_length = 5;
  std::uint64_t seed = 1;
  gen->add_option("family", family, "token or chain-grid")->required();
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--depth", depth, "levels of calls (chain-grid)");
  gen->add_option("--breadth", breadth, "calls per level (chain-grid)");
  gen->add_option("--template-length", template_length,
                  "non-exit template states (chain-grid)");
  gen->add_option("--seed", seed, "generator seed");

  // shared solve/enumerate/flatten/info options
  std::string bundle_path;
  std::string mode_flag;
  double eta = -1, epsilon = -1;
  int cadence = -1;
  std::uint64_t max_iterations = 0;
  unsigned threads = 1;
  bool override_local = false;
  std::string trace_path;
  std::uint64_t cli_seed = 0;
  hmdp::StateId flatten_cap = 0;

  auto* solve = app.add_subcommand(
      "solve", "Refine anytime lower/upper bounds on the model value");
  solve->add_option("bundle", bundle_path, "bundle.json or its directory")
      ->required();
  solve->add_option("--eta", eta, "stop once eta * ub <= lb (0 < eta <= 1)");
  solve->add_option("--epsilon", epsilon, "engine precision");
  solve->add_option("-k,--cadence", cadence,
                    "macro check every k-th refinement");
  solve->add_option("--max-iterations", max_iterations,
                    "refinement step cap");
  solve->add_option("--threads", threads, "concurrent individual checks");
  solve->add_option("--trace", trace_path, "write the macro check trace here");
  solve->add_option("--mode", mode_flag, "expected mode, checked against the bundle");
  solve->add_option("--seed", cli_seed, "accepted for reproducibility scripts");
  solve->add_flag("--override-local-optimality", override_local,
                  "run even if call-local optimality is not justified");

  auto* enumerate = app.add_subcommand(
      "enumerate", "Exact baseline: solve every call, then the macro model");
  enumerate->add_option("bundle", bundle_path, "bundle.json or its directory")
      ->required();
  enumerate->add_option("--epsilon", epsilon, "engine precision");
  enumerate->add_option("--mode", mode_flag, "expected mode");

  auto* flatten = app.add_subcommand(
      "flatten", "Splice template copies into one flat MDP and solve it");
  flatten->add_option("bundle", bundle_path, "bundle.json or its directory")
      ->required();
  flatten->add_option("--epsilon", epsilon, "engine precision");
  flatten->add_option("--cap", flatten_cap, "flat state cap");
  flatten->add_option("--mode", mode_flag, "expected mode");

  auto* info = app.add_subcommand("info", "Describe a bundle");
  info->add_option("bundle", bundle_path, "bundle.json or its directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (gen->parsed())
      return run_gen(family, out_dir, depth, breadth, template_length, seed);

    hmdp::Bundle bundle = load_checked(bundle_path);
    check_mode_flag(bundle.model, mode_flag);
    hmdp::RunDefaults& d = bundle.defaults;
    if (eta >= 0) d.eta = eta;
    if (epsilon >= 0) d.epsilon = epsilon;
    if (cadence >= 0) d.cadence = cadence;
    if (max_iterations > 0) d.max_iterations = max_iterations;
    if (flatten_cap > 0) d.flatten_cap = flatten_cap;

    hmdp::SolveOptions opts;
    opts.epsilon = d.epsilon;

    if (solve->parsed()) {
      hmdp::RefineConfig config;
      config.eta = d.eta;
      config.epsilon = d.epsilon;
      config.cadence = d.cadence;
      config.max_iterations = d.max_iterations;
      config.threads = threads;
      config.override_local_optimality = override_local;
      hmdp::Refiner refiner(bundle.model, config);
      try {
        hmdp::RefineResult result = refiner.run();
        if (!trace_path.empty()) write_trace(trace_path, result.trace);
        std::cout << "lower bound: " << std::setprecision(12) << result.lb
                  << "\n"
                  << "upper bound: " << std::setprecision(12) << result.ub
                  << "\n"
                  << "iterations: " << result.iterations << "\n"
                  << "macro checks: " << result.trace.size() << "\n"
                  << "fully refined: " << (result.fully_refined ? "yes" : "no")
                  << "\n";
        return kExitOk;
      } catch (const hmdp::IterationCapExceeded& e) {
        // Flush what was learned before the budget ran out.
        if (!trace_path.empty()) write_trace(trace_path, refiner.trace());
        std::cerr << "error: " << e.what() << "\n";
        std::cout << "lower bound: " << std::setprecision(12) << refiner.lb()
                  << "\n"
                  << "upper bound: " << std::setprecision(12) << refiner.ub()
                  << "\n";
        return kExitEngine;
      }
    }

    if (enumerate->parsed()) {
      hmdp::BaselineResult result =
          hmdp::enumerate_baseline(bundle.model, opts);
      std::cout << "value: " << std::setprecision(12) << result.value << "\n"
                << "calls: " << result.per_call.size() << "\n";
      return kExitOk;
    }

    if (flatten->parsed()) {
      hmdp::FlattenResult result =
          hmdp::flatten_and_solve(bundle.model, d.flatten_cap, opts);
      std::cout << "value: " << std::setprecision(12) << result.value << "\n"
                << "flat states: " << result.flat_states << "\n";
      return kExitOk;
    }

    if (info->parsed()) {
      const auto& m = bundle.model;
      std::size_t calls = m.call_states().size();
      std::cout << "mode: " << mode_name(m) << "\n"
                << "macro states: " << m.state_count() << " (" << calls
                << " calls)\n"
                << "template states: " << m.tmpl.core.state_count() << " ("
                << m.tmpl.exits.size() << " exits)\n"
                << "parameters:";
      for (size_t i = 0; i < m.tmpl.core.params.size(); ++i) {
        std::cout << " " << m.tmpl.core.params[i] << " in ["
                  << m.tmpl.admissible.lower[i] << ", "
                  << m.tmpl.admissible.upper[i] << "]";
      }
      std::cout << "\n"
                << "flat states: " << hmdp::flat_state_count(m) << "\n";
      auto local = hmdp::check_local_optimality(m);
      std::cout << "call-local optimality: "
                << (local.ok ? "justified" : local.reason) << "\n";
      return kExitOk;
    }
  } catch (const hmdp::ParseError& e) {
    std::cerr << "error: line " << e.line << ", column " << e.column << ": "
              << e.what() << "\n";
    return kExitInput;
  } catch (const hmdp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEngine;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitEngine;
  }
  return kExitOk;
}
