// SPDX-License-Identifier: Apache-2.0
#include "lmp/fbdm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lmp {

std::vector<std::size_t> ForegroundMask::frame_indices(std::size_t frame) const {
    std::vector<std::size_t> out;
    const std::size_t lo = frame * layout.frame_size();
    const std::size_t hi = lo + layout.frame_size();
    for (auto i : indices)
        if (i >= lo && i < hi) out.push_back(i);
    return out;
}

void ForegroundMask::validate() const {
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= layout.token_count()) throw ShapeError("foreground mask: index out of range");
        if (k > 0 && indices[k] <= indices[k - 1]) throw ShapeError("foreground mask: indices must be strictly increasing");
    }
}

std::size_t fraction_count(double fraction, std::size_t count) {
    const double x = fraction * static_cast<double>(count);
    const double snapped = std::nearbyint(x);
    const double k = std::abs(x - snapped) <= 1e-9 * std::max(1.0, x) ? snapped : std::ceil(x);
    return static_cast<std::size_t>(k);
}

namespace {

SaliencyVolume aggregate(const std::vector<const AttentionMap*>& maps, std::span<const std::size_t> subject,
                         const TokenLayout& layout) {
    if (maps.empty()) throw ShapeError("aggregate_subject_saliency: no attention maps");
    const std::size_t n = layout.token_count();
    SaliencyVolume out{layout, std::vector<double>(n, 0.0)};
    for (const AttentionMap* map_ptr : maps) {
        const AttentionMap& map = *map_ptr;
        const std::size_t m = map.prompt_len;
        if (map.video_len != n || map.rows() != m + n || map.cols() < m + n)
            throw ShapeError("aggregate_subject_saliency: map " + shape_string(map.values) + " does not match layout of " +
                             std::to_string(n) + " tokens");
        for (auto s : subject)
            if (s >= m) throw ShapeError("aggregate_subject_saliency: subject index " + std::to_string(s) + " >= m");
        for (std::size_t j = 0; j < n; ++j)
            for (auto s : subject) out.values[j] += map.values(s, m + j) + map.values(m + j, s);
    }
    const auto count = static_cast<double>(maps.size());
    for (double& v : out.values) v /= count;
    return out;
}

}  // namespace

SaliencyVolume aggregate_subject_saliency(std::span<const AttentionMap> maps, std::span<const std::size_t> subject,
                                          const TokenLayout& layout) {
    std::vector<const AttentionMap*> ptrs;
    for (const auto& m : maps) ptrs.push_back(&m);
    return aggregate(ptrs, subject, layout);
}

SaliencyVolume aggregate_subject_saliency(std::span<const BlockTrace> traces, std::span<const std::size_t> subject,
                                          const TokenLayout& layout) {
    std::vector<const AttentionMap*> ptrs;
    for (const auto& t : traces) ptrs.push_back(&t.attention);
    return aggregate(ptrs, subject, layout);
}

ForegroundMask select_foreground(const SaliencyVolume& s, const SelectionPolicy& policy) {
    if (!(policy.value > 0.0 && policy.value <= 1.0))
        throw ConfigError(std::string(policy.kind == SelectionPolicy::Kind::top_fraction ? "top_fraction q" : "threshold tau") +
                          " must lie in (0, 1]");
    if (s.values.size() != s.layout.token_count()) throw ShapeError("select_foreground: saliency length mismatch");
    const std::size_t per_frame = s.layout.frame_size();
    ForegroundMask mask{s.layout, {}};
    std::vector<std::size_t> order(per_frame);
    for (std::size_t f = 0; f < s.layout.frames; ++f) {
        const std::size_t base = f * per_frame;
        if (policy.kind == SelectionPolicy::Kind::top_fraction) {
            const std::size_t k = std::min(per_frame, fraction_count(policy.value, per_frame));
            std::iota(order.begin(), order.end(), base);
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                              [&](std::size_t a, std::size_t b) {
                                  return s.values[a] != s.values[b] ? s.values[a] > s.values[b] : a < b;
                              });
            std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
            std::sort(chosen.begin(), chosen.end());
            mask.indices.insert(mask.indices.end(), chosen.begin(), chosen.end());
        } else {
            const double peak = *std::max_element(s.values.begin() + static_cast<std::ptrdiff_t>(base),
                                                  s.values.begin() + static_cast<std::ptrdiff_t>(base + per_frame));
            const double cut = policy.value * peak;
            for (std::size_t i = base; i < base + per_frame; ++i)
                if (s.values[i] >= cut) mask.indices.push_back(i);
        }
    }
    return mask;
}

ReferenceKv gather_reference_kv(const BlockTrace& trace, const ForegroundMask& mask) {
    ReferenceKv out;
    for (const auto& head : trace.video_kv) {
        out.keys.push_back(gather_rows(head.key, mask.indices));
        out.values.push_back(gather_rows(head.value, mask.indices));
    }
    return out;
}

}  // namespace lmp
