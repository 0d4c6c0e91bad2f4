// SPDX-License-Identifier: Apache-2.0
#pragma once

// Attention/saliency dump files and PGM heatmaps.
//
// An attention dump is an LMPT stream of two records: a 1-D metadata record
// [m, n, r, frames, height, width] followed by the (m+n) x (m+n+r) map.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lmp/fbdm.hpp"
#include "lmp/latent.hpp"
#include "lmp/mmdit.hpp"

namespace lmp {

struct AttentionDump {
    AttentionMap map;
    TokenLayout layout;
};

void write_attention_dump(const std::filesystem::path& path, const AttentionMap& map, const TokenLayout& layout);
AttentionDump read_attention_dump(const std::filesystem::path& path);

std::string attention_dump_name(int t, std::size_t block);            // attn_t{t}_b{b}.lmpt
std::string reference_attention_dump_name(int t, std::size_t block);  // ref_attn_t{t}_b{b}.lmpt

void write_mask(const std::filesystem::path& path, const ForegroundMask& mask);
std::vector<std::size_t> read_mask_indices(const std::filesystem::path& path);
void write_saliency(const std::filesystem::path& path, const SaliencyVolume& s);

struct Heatmap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;  // normalized to [0, 1]
    bool constant = false;       // input had no spread; values are all zero
};

/// Min-max normalization; a constant input maps to zeros with `constant` set.
Heatmap make_heatmap(std::span<const double> values, std::size_t height, std::size_t width);
/// 8-bit levels, round half up: floor(v * 255 + 0.5).
std::vector<std::uint8_t> heatmap_levels(const Heatmap& h);
/// Binary PGM (P5, maxval 255).
std::string to_pgm(const Heatmap& h);

}  // namespace lmp
