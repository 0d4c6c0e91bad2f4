// SPDX-License-Identifier: Apache-2.0
#pragma once

// Appearance separation: gradient descent on the target video hidden states
// that lowers how strongly the reference subject words attend to (and are
// attended by) the target video.

#include <span>
#include <vector>

#include "lmp/mmdit.hpp"

namespace lmp {

struct AsmContext {
    std::vector<Matrix> prompt_queries;  // per head, m_ref x d_k (reference prompt)
    std::vector<Matrix> prompt_keys;     // per head, m_ref x d_k
    std::vector<std::size_t> subject_indices;
    double beta = 100.0;
    double fraction = 0.2;

    std::size_t prompt_len() const { return prompt_queries.empty() ? 0 : prompt_queries.front().rows; }
    void validate() const;
};

/// Projects the reference prompt hidden states entering a block through that
/// block's query/key maps.
AsmContext make_asm_context(const Matrix& reference_prompt, const BlockWeights& w,
                            std::vector<std::size_t> subject_indices, double beta, double fraction = 0.2);

/// softmax([Q^p_ref, Q^v_tar][K^p_ref, K^v_tar]^T / sqrt(d_k)), head-averaged.
AttentionMap cross_prompt_attention(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w);
std::vector<Matrix> cross_prompt_attention_heads(const AsmContext& ctx, const Matrix& target_video,
                                                 const BlockWeights& w);

/// Mean of the ceil(fraction * n) largest values, summed in descending order.
double top_fraction_mean(std::span<const double> values, double fraction);

/// Top-fraction mean over the pooled subject rows (text->video) and subject
/// columns (video->text) of the cross-prompt map, averaged over heads.
double asm_loss(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w);

struct AsmGradient {
    double loss = 0.0;
    Matrix gradient;  // same shape as target_video
};

/// Analytic gradient of asm_loss. At a tie on the k-th value the entries with
/// the lexicographically smallest (row, col) positions are the selected ones.
AsmGradient asm_loss_gradient(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w);

/// h' = h - beta * dL/dh. Weights are read-only.
Matrix asm_step(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w);

struct AsmStepResult {
    Matrix hidden;
    double loss_before = 0.0;
};
AsmStepResult asm_step_with_loss(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w);

}  // namespace lmp
