// SPDX-License-Identifier: Apache-2.0
#pragma once

// Toy MM-DiT block: one joint self-attention over concatenated prompt and
// video tokens followed by a residual feedforward.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lmp/tensor.hpp"

namespace lmp {

struct HeadWeights {
    Matrix query;  // d x d_k
    Matrix key;    // d x d_k
    Matrix value;  // d x d_k
};

struct BlockWeights {
    std::vector<HeadWeights> heads;
    Matrix output;       // (H * d_k) x d
    Matrix feedforward;  // d x d

    std::size_t width() const { return feedforward.rows; }
    std::size_t head_width() const { return heads.empty() ? 0 : heads.front().query.cols; }
    void validate() const;
};

struct ModelDims {
    std::size_t blocks = 4;
    std::size_t heads = 2;
    std::size_t width = 16;
    std::size_t head_width = 8;
    std::size_t channels = 4;
};

struct ModelWeights {
    ModelDims dims;
    Matrix embed;    // channels x width ("Mapping")
    Matrix project;  // width x channels ("Projection")
    std::vector<BlockWeights> blocks;

    void validate() const;
};

/// Reproducible byte-for-byte from (seed, block_index).
BlockWeights make_block_weights(std::uint64_t seed, std::size_t block_index, std::size_t heads, std::size_t width,
                                std::size_t head_width);
ModelWeights make_model_weights(std::uint64_t seed, const ModelDims& dims);

void save_model_weights(const std::filesystem::path& path, const ModelWeights& weights);
ModelWeights load_model_weights(const std::filesystem::path& path);

struct HiddenStates {
    Matrix prompt;  // m x d
    Matrix video;   // n x d

    std::size_t width() const { return video.cols; }
    Matrix stacked() const { return vstack(prompt, video); }
};

/// Row-stochastic map over m + n queries and m + n (+ r reference) keys.
struct AttentionMap {
    std::size_t prompt_len = 0;
    std::size_t video_len = 0;
    std::size_t ref_len = 0;
    Matrix values;

    std::size_t rows() const { return values.rows; }
    std::size_t cols() const { return values.cols; }
};

struct Quadrants {
    Matrix text_text;    // m x m
    Matrix text_video;   // m x n
    Matrix video_text;   // n x m
    Matrix video_video;  // n x n
};

/// Splits the leading (m+n) x (m+n) square; trailing reference columns are ignored.
Quadrants partition(const AttentionMap& map, std::size_t m, std::size_t n);
Matrix reassemble(const Quadrants& q);

double max_row_sum_error(const AttentionMap& map);

/// Per-head video-part keys and values, n x d_k each.
struct HeadCache {
    Matrix key;
    Matrix value;
};

struct BlockTrace {
    AttentionMap attention;  // head-averaged
    std::vector<HeadCache> video_kv;
};

struct AttentionResult {
    HiddenStates hidden;
    AttentionMap attention;              // head-averaged
    std::vector<Matrix> head_maps;       // per head, same shape as attention.values
    std::vector<Matrix> head_outputs;    // per head, pre-output-map A * V
    std::vector<HeadCache> video_kv;
};

/// softmax([Q^p, Q^v][K^p, K^v]^T / sqrt(d_k)) [V^p; V^v], heads concatenated,
/// mapped by the output projection and added to the input.
AttentionResult joint_attention(const HiddenStates& h, const BlockWeights& w, std::size_t block_index = 0);

/// The residual feedforward applied after attention: x + tanh(x W).
HiddenStates feedforward(const HiddenStates& h, const BlockWeights& w);

namespace detail {

// Shared kernel. extra_keys/extra_values are per-head r x d_k rows appended
// after the block's own keys and values; pass empty spans for plain attention.
AttentionResult attend(const HiddenStates& h, const BlockWeights& w, std::span<const Matrix> extra_keys,
                       std::span<const Matrix> extra_values, std::size_t block_index);

void softmax_rows(Matrix& logits);

}  // namespace detail

}  // namespace lmp
