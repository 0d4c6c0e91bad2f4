// SPDX-License-Identifier: Apache-2.0
#include "lmp/latent.hpp"

#include <string>

namespace lmp {

void TokenLayout::validate() const {
    if (frames == 0 || height == 0 || width == 0) throw ShapeError("token layout dimensions must be >= 1");
}

void LatentVideo::validate() const {
    if (frames == 0 || height == 0 || width == 0 || channels == 0)
        throw ShapeError("latent video dimensions must be >= 1");
    if (data.size() != frames * height * width * channels)
        throw ShapeError("latent video data length " + std::to_string(data.size()) + " does not match dims");
    if (!all_finite(data)) throw NumericError("latent video contains non-finite values");
}

void PromptTokens::validate() const {
    if (subject_indices.empty()) throw ShapeError("prompt subject indices must be non-empty");
    for (std::size_t k = 0; k < subject_indices.size(); ++k) {
        if (subject_indices[k] >= tokens.rows)
            throw ShapeError("subject index " + std::to_string(subject_indices[k]) + " out of range for prompt of " +
                             std::to_string(tokens.rows) + " tokens");
        if (k > 0 && subject_indices[k] <= subject_indices[k - 1])
            throw ShapeError("subject indices must be strictly increasing");
    }
    if (!all_finite(tokens)) throw NumericError("prompt tokens contain non-finite values");
}

Tokenized tokenize(const LatentVideo& video, const Matrix& embed) {
    video.validate();
    if (embed.rows != video.channels)
        throw ShapeError("tokenize: embed has " + std::to_string(embed.rows) + " rows, latent has " +
                         std::to_string(video.channels) + " channels");
    // (f,h,w,c) row-major storage already is an n x c matrix in token order.
    Matrix cells(video.frames * video.height * video.width, video.channels);
    cells.data = video.data;
    return {matmul(cells, embed), video.layout()};
}

LatentVideo detokenize(const TokenSequence& tokens, const TokenLayout& layout, const Matrix& project) {
    layout.validate();
    if (tokens.rows != layout.token_count())
        throw ShapeError("detokenize: " + std::to_string(tokens.rows) + " tokens for a layout of " +
                         std::to_string(layout.token_count()));
    if (project.rows != tokens.cols)
        throw ShapeError("detokenize: projection " + shape_string(project) + " does not accept width " +
                         std::to_string(tokens.cols));
    Matrix cells = matmul(tokens, project);
    LatentVideo out(layout.frames, layout.height, layout.width, project.cols);
    out.data = std::move(cells.data);
    return out;
}

}  // namespace lmp
