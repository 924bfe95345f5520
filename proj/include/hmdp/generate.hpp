#pragma once

#include <cstdint>

#include "hmdp/model.hpp"

namespace hmdp {

/// Hand-sized demo: a two-step loop template (advance with probability
/// p, value 2/p) called six times in a diamond of shared subtasks.
HierarchicalModel make_token_model();

/// Seeded family of grids: depth levels of breadth parallel calls of a
/// chain template with template_length non-exit states. Dispatch states
/// route uniformly between levels; parameter values are drawn as exact
/// k/10000 rationals in [0.2, 0.9].
HierarchicalModel make_chain_grid(unsigned depth, unsigned breadth,
                                  unsigned template_length,
                                  std::uint64_t seed);

}  // namespace hmdp
