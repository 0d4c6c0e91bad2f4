// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fore/background disentangling: subject-word attention pooled from the
// text-video and video-text quadrants, then per-frame foreground selection.

#include <cstddef>
#include <span>
#include <vector>

#include "lmp/latent.hpp"
#include "lmp/mmdit.hpp"

namespace lmp {

struct SaliencyVolume {
    TokenLayout layout;
    std::vector<double> values;  // length n, viewed as f x h x w

    double at(std::size_t f, std::size_t r, std::size_t c) const { return values[layout.index(f, r, c)]; }
};

struct ForegroundMask {
    TokenLayout layout;
    std::vector<std::size_t> indices;  // strictly increasing token indices

    bool empty() const { return indices.empty(); }
    std::vector<std::size_t> frame_indices(std::size_t frame) const;
    void validate() const;
    bool operator==(const ForegroundMask&) const = default;
};

struct SelectionPolicy {
    enum class Kind { top_fraction, threshold };
    Kind kind = Kind::top_fraction;
    double value = 0.25;  // q for top_fraction, tau for threshold

    static SelectionPolicy top_fraction(double q) { return {Kind::top_fraction, q}; }
    static SelectionPolicy threshold(double tau) { return {Kind::threshold, tau}; }
};

/// ceil(fraction * count), guarded against the product landing a few ulps
/// above an integer (e.g. 0.1 * 30).
std::size_t fraction_count(double fraction, std::size_t count);

/// value(j) = mean over maps of sum_s (tv[s, j] + vt[j, s]). Maps are already
/// head-averaged, so this equals the mean over blocks and heads.
SaliencyVolume aggregate_subject_saliency(std::span<const AttentionMap> maps, std::span<const std::size_t> subject,
                                          const TokenLayout& layout);
SaliencyVolume aggregate_subject_saliency(std::span<const BlockTrace> traces, std::span<const std::size_t> subject,
                                          const TokenLayout& layout);

/// top_fraction keeps the ceil(q*h*w) most salient tokens of every frame
/// (ties go to the lower index); threshold keeps tokens >= tau * frame max.
ForegroundMask select_foreground(const SaliencyVolume& s, const SelectionPolicy& policy);

struct ReferenceKv {
    std::vector<Matrix> keys;    // per head, r x d_k
    std::vector<Matrix> values;  // per head, r x d_k
    std::size_t rows() const { return keys.empty() ? 0 : keys.front().rows; }
};

ReferenceKv gather_reference_kv(const BlockTrace& trace, const ForegroundMask& mask);

}  // namespace lmp
