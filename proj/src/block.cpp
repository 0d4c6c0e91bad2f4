// SPDX-License-Identifier: Apache-2.0
#include "lmp/block.hpp"

#include <string>

#include "lmp/rtmm.hpp"

namespace lmp {

namespace {

void check_hook_order(std::span<const BlockHook> hooks, std::size_t block_index) {
    int asm_count = 0;
    int rmtm_count = 0;
    for (const auto& hook : hooks) {
        if (std::holds_alternative<AsmHook>(hook)) {
            if (rmtm_count > 0)
                throw ConfigError("block " + std::to_string(block_index) + ": ASM hook declared after RMTM");
            ++asm_count;
        } else {
            ++rmtm_count;
        }
    }
    if (asm_count > 1 || rmtm_count > 1)
        throw ConfigError("block " + std::to_string(block_index) + ": at most one hook of each kind");
}

}  // namespace

BlockOutput block_forward(const HiddenStates& h, const BlockWeights& w, std::span<const BlockHook> hooks,
                          std::size_t block_index) {
    check_hook_order(hooks, block_index);
    BlockOutput out;
    HiddenStates current = h;
    const RmtmHook* rmtm = nullptr;
    for (const auto& hook : hooks) {
        if (const auto* a = std::get_if<AsmHook>(&hook)) {
            auto step = asm_step_with_loss(a->context, current.video, w);
            current.video = std::move(step.hidden);
            out.asm_loss = step.loss_before;
            out.applied.emplace_back("asm");
        } else {
            rmtm = &std::get<RmtmHook>(hook);
        }
    }

    AttentionResult attn;
    if (rmtm != nullptr) {
        if (rmtm->reference == nullptr)
            throw ConfigError("block " + std::to_string(block_index) + ": RMTM hook has no reference trace");
        const auto kv = gather_reference_kv(*rmtm->reference, rmtm->mask);
        attn = extended_attention(current, w, InjectionSpec::from(kv, rmtm->lambda), block_index);
        out.reference_mass = reference_mass(attn.attention, attn.attention.ref_len);
        out.applied.emplace_back("rmtm");
    } else {
        attn = joint_attention(current, w, block_index);
    }
    out.hidden = feedforward(attn.hidden, w);
    if (!all_finite(out.hidden.video) || !all_finite(out.hidden.prompt))
        throw NumericError("block " + std::to_string(block_index) + ": non-finite feedforward output");
    out.trace = {std::move(attn.attention), std::move(attn.video_kv)};
    return out;
}

ModelOutput model_forward(const HiddenStates& h, std::span<const BlockWeights> blocks,
                          std::span<const std::vector<BlockHook>> hooks) {
    if (!hooks.empty() && hooks.size() != blocks.size())
        throw ConfigError("model_forward: hook lists must match block count");
    ModelOutput out{h, {}};
    out.traces.reserve(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const std::span<const BlockHook> block_hooks =
            hooks.empty() ? std::span<const BlockHook>{} : std::span<const BlockHook>(hooks[b]);
        auto res = block_forward(out.hidden, blocks[b], block_hooks, b);
        out.hidden = std::move(res.hidden);
        out.traces.push_back(std::move(res.trace));
    }
    return out;
}

}  // namespace lmp
