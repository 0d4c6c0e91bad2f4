// SPDX-License-Identifier: Apache-2.0
#include "lmp/dump.hpp"

#include <algorithm>
#include <cmath>

#include "lmp/lmpt.hpp"

namespace lmp {

void write_attention_dump(const std::filesystem::path& path, const AttentionMap& map, const TokenLayout& layout) {
    const std::vector<double> meta{static_cast<double>(map.prompt_len), static_cast<double>(map.video_len),
                                   static_cast<double>(map.ref_len),    static_cast<double>(layout.frames),
                                   static_cast<double>(layout.height),  static_cast<double>(layout.width)};
    const std::vector<Tensor> records{to_tensor(std::span<const double>(meta)), to_tensor(map.values)};
    write_lmpt_file(path, records);
}

AttentionDump read_attention_dump(const std::filesystem::path& path) {
    const auto records = read_lmpt_file(path);
    if (records.size() != 2) throw IoError(path.string() + ": attention dump must hold exactly 2 records");
    const auto meta = indices_from_tensor(records[0]);
    if (meta.size() != 6) throw IoError(path.string() + ": attention dump metadata must hold 6 entries");
    AttentionDump d;
    d.map.prompt_len = meta[0];
    d.map.video_len = meta[1];
    d.map.ref_len = meta[2];
    d.layout = {meta[3], meta[4], meta[5]};
    d.map.values = matrix_from_tensor(records[1]);
    if (d.layout.token_count() != d.map.video_len || d.layout.token_count() == 0)
        throw IoError(path.string() + ": layout does not match video token count");
    if (d.map.rows() != d.map.prompt_len + d.map.video_len ||
        d.map.cols() != d.map.prompt_len + d.map.video_len + d.map.ref_len)
        throw IoError(path.string() + ": map shape disagrees with metadata");
    return d;
}

std::string attention_dump_name(int t, std::size_t block) {
    return "attn_t" + std::to_string(t) + "_b" + std::to_string(block) + ".lmpt";
}

std::string reference_attention_dump_name(int t, std::size_t block) {
    return "ref_" + attention_dump_name(t, block);
}

void write_mask(const std::filesystem::path& path, const ForegroundMask& mask) {
    write_lmpt_file(path, to_tensor(std::span<const std::size_t>(mask.indices)));
}

std::vector<std::size_t> read_mask_indices(const std::filesystem::path& path) {
    const auto records = read_lmpt_file(path);
    if (records.size() != 1) throw IoError(path.string() + ": mask file must hold one record");
    return indices_from_tensor(records[0]);
}

void write_saliency(const std::filesystem::path& path, const SaliencyVolume& s) {
    Tensor t{{s.layout.frames, s.layout.height, s.layout.width}, {}};
    t.values.assign(s.values.begin(), s.values.end());
    write_lmpt_file(path, t);
}

Heatmap make_heatmap(std::span<const double> values, std::size_t height, std::size_t width) {
    if (values.size() != height * width) throw ShapeError("heatmap: value count does not match height x width");
    if (!all_finite(values)) throw NumericError("heatmap: non-finite values");
    Heatmap h{height, width, std::vector<double>(values.size(), 0.0), false};
    if (values.empty()) return h;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*hi == *lo) {
        h.constant = true;
        return h;
    }
    const double span = *hi - *lo;
    for (std::size_t i = 0; i < values.size(); ++i) h.values[i] = (values[i] - *lo) / span;
    return h;
}

std::vector<std::uint8_t> heatmap_levels(const Heatmap& h) {
    std::vector<std::uint8_t> out(h.values.size());
    for (std::size_t i = 0; i < h.values.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::clamp(std::floor(h.values[i] * 255.0 + 0.5), 0.0, 255.0));
    return out;
}

std::string to_pgm(const Heatmap& h) {
    std::string out = "P5\n" + std::to_string(h.width) + " " + std::to_string(h.height) + "\n255\n";
    for (auto v : heatmap_levels(h)) out.push_back(static_cast<char>(v));
    return out;
}

}  // namespace lmp
