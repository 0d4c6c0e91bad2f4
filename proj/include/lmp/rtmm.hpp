// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reweighted motion transfer: target queries attend over their own keys plus
// reference foreground keys scaled by lambda.

#include <vector>

#include "lmp/fbdm.hpp"
#include "lmp/mmdit.hpp"

namespace lmp {

struct InjectionSpec {
    std::vector<Matrix> keys;    // per head, r x d_k
    std::vector<Matrix> values;  // per head, r x d_k
    double lambda = 1.0;

    std::size_t rows() const { return keys.empty() ? 0 : keys.front().rows; }
    void validate(std::size_t heads, std::size_t head_width) const;

    static InjectionSpec from(ReferenceKv kv, double lambda) {
        return {std::move(kv.keys), std::move(kv.values), lambda};
    }
};

/// Keys [K^p, K^v, lambda * K_ref], values [V^p, V^v, V_ref]. The returned map
/// has m + n rows and m + n + r columns. r = 0 is plain joint attention.
AttentionResult extended_attention(const HiddenStates& h, const BlockWeights& w, const InjectionSpec& inj,
                                   std::size_t block_index = 0);

/// Unweighted concatenation of reference keys and values.
AttentionResult concat_attention(const HiddenStates& h, const BlockWeights& w, const std::vector<Matrix>& ref_keys,
                                 const std::vector<Matrix>& ref_values, std::size_t block_index = 0);

/// Mean over video-query rows of the attention mass on the last r columns.
double reference_mass(const AttentionMap& map, std::size_t r);

}  // namespace lmp
