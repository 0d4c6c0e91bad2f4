// SPDX-License-Identifier: Apache-2.0
#include "lmp/rtmm.hpp"

#include <cmath>
#include <string>

namespace lmp {

void InjectionSpec::validate(std::size_t heads, std::size_t head_width) const {
    if (!std::isfinite(lambda)) throw ShapeError("injection: lambda must be finite");
    if (keys.empty() && values.empty()) return;
    if (keys.size() != heads || values.size() != heads)
        throw ShapeError("injection: expected K/V for " + std::to_string(heads) + " heads");
    for (std::size_t h = 0; h < heads; ++h) {
        if (keys[h].rows != rows() || values[h].rows != rows())
            throw ShapeError("injection: reference key and value row counts differ");
        if (rows() > 0 && (keys[h].cols != head_width || values[h].cols != head_width))
            throw ShapeError("injection: reference K/V width does not match d_k=" + std::to_string(head_width));
    }
}

AttentionResult extended_attention(const HiddenStates& h, const BlockWeights& w, const InjectionSpec& inj,
                                   std::size_t block_index) {
    inj.validate(w.heads.size(), w.head_width());
    if (inj.rows() == 0) return joint_attention(h, w, block_index);
    std::vector<Matrix> keys;
    keys.reserve(inj.keys.size());
    for (const auto& k : inj.keys) keys.push_back(scaled(k, inj.lambda));
    return detail::attend(h, w, keys, inj.values, block_index);
}

AttentionResult concat_attention(const HiddenStates& h, const BlockWeights& w, const std::vector<Matrix>& ref_keys,
                                 const std::vector<Matrix>& ref_values, std::size_t block_index) {
    return detail::attend(h, w, ref_keys, ref_values, block_index);
}

double reference_mass(const AttentionMap& map, std::size_t r) {
    if (r > map.cols()) throw ShapeError("reference_mass: r exceeds column count");
    if (r == 0 || map.video_len == 0) return 0.0;
    const std::size_t first = map.cols() - r;
    double total = 0.0;
    for (std::size_t i = map.prompt_len; i < map.prompt_len + map.video_len; ++i) {
        double row = 0.0;
        for (std::size_t j = first; j < map.cols(); ++j) row += map.values(i, j);
        total += row;
    }
    return total / static_cast<double>(map.video_len);
}

}  // namespace lmp
