#pragma once

#include <string>

#include "hmdp/model.hpp"

namespace hmdp {

/// Template format, line oriented ('#' starts a comment):
///   param <name> in [<number>, <number>]     one line per parameter
///   entry <state>
///   exits <state> [<state> ...]              ordered exit states
///   <state> | <action> | <succ>: <expr>, ... | <reward-expr>
/// Numbers are decimals or rationals "a/b"; expressions use + - * and
/// parentheses over declared parameters. States appear implicitly; exit
/// states take no rows. Multiple rows per state repeat the state name
/// with distinct actions and identical reward expressions.
TemplateModel parse_template(const std::string& text);

/// Macro format, line oriented:
///   mode single | success-target <template-exit>
///   init <state>
///   targets <state> [<state> ...]
///   call <state> | <param> = <number>, ... | exits = <succ>[, <succ>]
///   concrete <state> | <action> | <succ>: <number>, ... | <reward>
/// Call exits follow the template exit order; target states need no
/// rows. Throws ParseError with 1-based line/column on any problem.
HierarchicalModel parse_macro(const std::string& text,
                              const TemplateModel& tmpl);

std::string serialize(const TemplateModel& tmpl);
std::string serialize_macro(const HierarchicalModel& model);

/// Run configuration persisted next to the model files.
struct RunDefaults {
  double eta{0.9};
  double epsilon{1e-8};
  int cadence{8};
  unsigned seed{0};
  std::uint64_t max_iterations{1'000'000};
  StateId flatten_cap{10'000'000};
};

struct Bundle {
  HierarchicalModel model;
  RunDefaults defaults;
};

/// Reads a bundle from a bundle.json path or a directory containing
/// one; model paths are resolved relative to the bundle file.
Bundle load_bundle(const std::string& path);

/// Writes template.txt, macro.txt and bundle.json into dir.
void write_bundle(const std::string& dir, const HierarchicalModel& model,
                  const RunDefaults& defaults);

}  // namespace hmdp
