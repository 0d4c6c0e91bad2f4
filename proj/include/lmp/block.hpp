// SPDX-License-Identifier: Apache-2.0
#pragma once

// Block forward pass with intervention hooks: appearance separation runs on the
// target video hidden states before attention, motion transfer extends the
// attention itself.

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lmp/appearance.hpp"
#include "lmp/fbdm.hpp"
#include "lmp/mmdit.hpp"

namespace lmp {

struct AsmHook {
    AsmContext context;
};

struct RmtmHook {
    const BlockTrace* reference = nullptr;  // reference branch cache for this block
    ForegroundMask mask;
    double lambda = 0.98;
};

using BlockHook = std::variant<AsmHook, RmtmHook>;

struct BlockOutput {
    HiddenStates hidden;
    BlockTrace trace;
    std::optional<double> asm_loss;        // loss at the states entering the ASM step
    std::optional<double> reference_mass;  // set when RMTM injected tokens
    std::vector<std::string> applied;      // hook names in application order
};

/// Hooks must be declared ASM first, then RMTM, at most one of each.
BlockOutput block_forward(const HiddenStates& h, const BlockWeights& w, std::span<const BlockHook> hooks = {},
                          std::size_t block_index = 0);

struct ModelOutput {
    HiddenStates hidden;
    std::vector<BlockTrace> traces;
};

/// hooks, when non-empty, holds one hook list per block.
ModelOutput model_forward(const HiddenStates& h, std::span<const BlockWeights> blocks,
                          std::span<const std::vector<BlockHook>> hooks = {});

}  // namespace lmp
