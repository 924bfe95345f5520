#include "hmdp/generate.hpp"

#include <random>
#include <string>

#include "hmdp/errors.hpp"
#include "hmdp/rational.hpp"

namespace hmdp {
namespace {

MultilinearExpr num(std::int64_t n, std::int64_t d = 1) {
  return MultilinearExpr::constant(Rational(n, d));
}

/// Chain template: advance with probability p, stay otherwise, reward 1
/// per step state. Expected reward to the exit is length/p.
TemplateModel make_chain_template(unsigned length) {
  TemplateModel tmpl;
  tmpl.core.params = {"p"};
  tmpl.admissible.lower = {0.05};
  tmpl.admissible.upper = {0.95};
  MultilinearExpr p = MultilinearExpr::variable(0);
  MultilinearExpr stay = num(1) - p;
  for (unsigned k = 0; k <= length; ++k)
    tmpl.core.state_names.push_back("s" + std::to_string(k));
  tmpl.core.rows.resize(length + 1);
  for (unsigned k = 0; k < length; ++k) {
    tmpl.core.rows[k].push_back(
        {"step", {{k, stay}, {k + 1, p}}});
    tmpl.core.rewards.push_back(num(1));
    tmpl.core.target.push_back(false);
  }
  tmpl.core.rewards.push_back(num(0));
  tmpl.core.target.push_back(true);
  tmpl.core.initial = 0;
  tmpl.entry = 0;
  tmpl.exits = {length};
  return tmpl;
}

}  // namespace

HierarchicalModel make_token_model() {
  HierarchicalModel model;
  model.tmpl = make_chain_template(2);
  model.mode = HierarchyMode::kSingleSuccessor;

  auto add_call = [&](const std::string& name, double p) {
    HierarchicalModel::MacroState ms;
    ms.name = name;
    ms.is_call = true;
    ms.valuation.values = {p};
    model.states.push_back(std::move(ms));
    return static_cast<StateId>(model.states.size() - 1);
  };
  auto add_concrete = [&](const std::string& name) {
    HierarchicalModel::MacroState ms;
    ms.name = name;
    model.states.push_back(std::move(ms));
    return static_cast<StateId>(model.states.size() - 1);
  };

  StateId m0 = add_call("m0", 0.5);
  StateId x0 = add_concrete("x0");
  StateId m1 = add_call("m1", 0.4);
  StateId x1 = add_concrete("x1");
  StateId m2 = add_call("m2", 0.625);
  StateId x2 = add_concrete("x2");
  StateId m3 = add_call("m3", 0.32);
  StateId x3 = add_concrete("x3");
  StateId m4 = add_call("m4", 0.5);
  StateId x4 = add_concrete("x4");
  StateId m5 = add_call("m5", 0.78125);
  StateId x5 = add_concrete("x5");
  StateId done = add_concrete("done");

  model.states[m0].exit_wiring = {x0};
  model.states[m1].exit_wiring = {x1};
  model.states[m2].exit_wiring = {x2};
  model.states[m3].exit_wiring = {x3};
  model.states[m4].exit_wiring = {x4};
  model.states[m5].exit_wiring = {x5};
  model.states[x0].rows.push_back({"split", {{m1, 0.5}, {m2, 0.5}}});
  model.states[x1].rows.push_back({"split", {{m3, 0.5}, {m4, 0.5}}});
  model.states[x2].rows.push_back({"split", {{m3, 0.5}, {m5, 0.5}}});
  model.states[x3].rows.push_back({"go", {{done, 1.0}}});
  model.states[x4].rows.push_back({"go", {{done, 1.0}}});
  model.states[x5].rows.push_back({"go", {{done, 1.0}}});

  model.target.assign(model.states.size(), false);
  model.target[done] = true;
  model.initial = m0;
  return model;
}

HierarchicalModel make_chain_grid(unsigned depth, unsigned breadth,
                                  unsigned template_length,
                                  std::uint64_t seed) {
  if (depth == 0 || breadth == 0 || template_length == 0)
    throw Error("chain grid needs depth, breadth and template length >= 1");
  HierarchicalModel model;
  model.tmpl = make_chain_template(template_length);
  model.mode = HierarchyMode::kSingleSuccessor;
  std::mt19937_64 rng(seed);

  auto add_state = [&](const std::string& name) {
    HierarchicalModel::MacroState ms;
    ms.name = name;
    model.states.push_back(std::move(ms));
    return static_cast<StateId>(model.states.size() - 1);
  };

  StateId root = add_state("root");
  std::vector<std::vector<StateId>> calls(depth);
  std::vector<std::vector<StateId>> dispatch(depth);
  for (unsigned level = 0; level < depth; ++level) {
    for (unsigned lane = 0; lane < breadth; ++lane) {
      std::string tag = std::to_string(level) + "_" + std::to_string(lane);
      StateId g = add_state("g" + tag);
      // k/10000 with k in [2000, 9000]; exact both here and once the
      // serialized rational is read back.
      std::uint64_t k = 2000 + rng() % 7001;
      model.states[g].is_call = true;
      model.states[g].valuation.values = {static_cast<double>(k) / 10000.0};
      calls[level].push_back(g);
      dispatch[level].push_back(add_state("x" + tag));
      model.states[g].exit_wiring = {dispatch[level].back()};
    }
  }
  StateId done = add_state("done");

  auto fan_out = [&](StateId from, const std::vector<StateId>& to) {
    ConcreteMdp::Row row;
    row.action = "go";
    double p = 1.0 / static_cast<double>(to.size());
    for (StateId t : to) row.branches.push_back({t, p});
    model.states[from].rows.push_back(std::move(row));
  };
  fan_out(root, calls[0]);
  for (unsigned level = 0; level < depth; ++level) {
    for (unsigned lane = 0; lane < breadth; ++lane) {
      if (level + 1 < depth)
        fan_out(dispatch[level][lane], calls[level + 1]);
      else
        fan_out(dispatch[level][lane], {done});
    }
  }

  model.target.assign(model.states.size(), false);
  model.target[done] = true;
  model.initial = root;
  return model;
}

}  // namespace hmdp
