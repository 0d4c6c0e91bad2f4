// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "lmp/tensor.hpp"

namespace lmp {

struct GridPosition {
    std::size_t frame = 0;
    std::size_t row = 0;
    std::size_t col = 0;
    bool operator==(const GridPosition&) const = default;
};

/// Maps (frame, row, col) onto a flat token index with unit patches:
/// index = f*h*w + r*w + c.
struct TokenLayout {
    std::size_t frames = 1;
    std::size_t height = 1;
    std::size_t width = 1;

    std::size_t token_count() const { return frames * height * width; }
    std::size_t frame_size() const { return height * width; }
    std::size_t index(std::size_t f, std::size_t r, std::size_t c) const { return f * height * width + r * width + c; }
    std::size_t index(const GridPosition& p) const { return index(p.frame, p.row, p.col); }
    GridPosition position(std::size_t token) const {
        return {token / frame_size(), (token % frame_size()) / width, token % width};
    }
    void validate() const;
    bool operator==(const TokenLayout&) const = default;
};

/// f x h x w x c latent grid, row-major with channels innermost.
struct LatentVideo {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> data;

    LatentVideo() = default;
    LatentVideo(std::size_t f, std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : frames(f), height(h), width(w), channels(c), data(f * h * w * c, fill) {}

    double& at(std::size_t f, std::size_t r, std::size_t col, std::size_t ch) {
        return data[((f * height + r) * width + col) * channels + ch];
    }
    double at(std::size_t f, std::size_t r, std::size_t col, std::size_t ch) const {
        return data[((f * height + r) * width + col) * channels + ch];
    }

    TokenLayout layout() const { return {frames, height, width}; }
    bool same_shape(const LatentVideo& o) const {
        return frames == o.frames && height == o.height && width == o.width && channels == o.channels;
    }
    /// Throws ShapeError on zero dims / length mismatch, NumericError on non-finite data.
    void validate() const;
};

using TokenSequence = Matrix;

/// Prompt embeddings plus the positions of the subject words.
struct PromptTokens {
    Matrix tokens;  // m x d
    std::vector<std::size_t> subject_indices;

    std::size_t size() const { return tokens.rows; }
    void validate() const;
};

struct Tokenized {
    TokenSequence tokens;
    TokenLayout layout;
};

// embed is c x d; token i is the channel vector at layout.position(i) times embed.
Tokenized tokenize(const LatentVideo& video, const Matrix& embed);
// project is d x c.
LatentVideo detokenize(const TokenSequence& tokens, const TokenLayout& layout, const Matrix& project);

}  // namespace lmp
