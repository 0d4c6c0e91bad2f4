// SPDX-License-Identifier: Apache-2.0
#include "lmp/mmdit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmp/lmpt.hpp"
#include "lmp/rng.hpp"

namespace lmp {

namespace {

constexpr std::uint64_t kEmbedStream = 0xE0;
constexpr std::uint64_t kProjectStream = 0xE1;
constexpr std::uint64_t kBlockStreamBase = 0x100;

std::string block_tag(std::size_t block_index) { return "block " + std::to_string(block_index); }

}  // namespace

void BlockWeights::validate() const {
    if (heads.empty()) throw ShapeError("block weights: no heads");
    const std::size_t d = width();
    const std::size_t dk = head_width();
    if (d == 0 || dk == 0) throw ShapeError("block weights: zero width");
    for (const auto& h : heads) {
        for (const Matrix* m : {&h.query, &h.key, &h.value})
            if (m->rows != d || m->cols != dk) throw ShapeError("block weights: head projection " + shape_string(*m));
    }
    if (output.rows != heads.size() * dk || output.cols != d)
        throw ShapeError("block weights: output map " + shape_string(output));
    if (feedforward.cols != d) throw ShapeError("block weights: feedforward " + shape_string(feedforward));
}

void ModelWeights::validate() const {
    if (blocks.size() != dims.blocks) throw ShapeError("model weights: block count mismatch");
    if (embed.rows != dims.channels || embed.cols != dims.width) throw ShapeError("model weights: embed " + shape_string(embed));
    if (project.rows != dims.width || project.cols != dims.channels)
        throw ShapeError("model weights: project " + shape_string(project));
    for (const auto& b : blocks) {
        b.validate();
        if (b.width() != dims.width || b.heads.size() != dims.heads || b.head_width() != dims.head_width)
            throw ShapeError("model weights: block dims disagree with model dims");
    }
}

BlockWeights make_block_weights(std::uint64_t seed, std::size_t block_index, std::size_t heads, std::size_t width,
                                std::size_t head_width) {
    if (heads == 0 || width == 0 || head_width == 0) throw ShapeError("make_block_weights: zero dimension");
    Rng rng = make_rng(seed, Stream::weights, kBlockStreamBase + block_index);
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(width));
    BlockWeights w;
    w.heads.resize(heads);
    for (auto& h : w.heads) {
        h.query = random_normal(width, head_width, rng, in_scale);
        h.key = random_normal(width, head_width, rng, in_scale);
        h.value = random_normal(width, head_width, rng, in_scale);
    }
    w.output = random_normal(heads * head_width, width, rng, 0.5 / std::sqrt(static_cast<double>(heads * head_width)));
    w.feedforward = random_normal(width, width, rng, 0.5 * in_scale);
    return w;
}

ModelWeights make_model_weights(std::uint64_t seed, const ModelDims& dims) {
    ModelWeights m;
    m.dims = dims;
    Rng embed_rng = make_rng(seed, Stream::weights, kEmbedStream);
    m.embed = random_normal(dims.channels, dims.width, embed_rng, 1.0 / std::sqrt(static_cast<double>(dims.channels)));
    Rng project_rng = make_rng(seed, Stream::weights, kProjectStream);
    m.project = random_normal(dims.width, dims.channels, project_rng, 1.0 / std::sqrt(static_cast<double>(dims.width)));
    for (std::size_t b = 0; b < dims.blocks; ++b)
        m.blocks.push_back(make_block_weights(seed, b, dims.heads, dims.width, dims.head_width));
    m.validate();
    return m;
}

void save_model_weights(const std::filesystem::path& path, const ModelWeights& weights) {
    weights.validate();
    std::vector<Tensor> records;
    const auto& d = weights.dims;
    const std::vector<double> header{static_cast<double>(d.blocks), static_cast<double>(d.heads),
                                     static_cast<double>(d.width), static_cast<double>(d.head_width),
                                     static_cast<double>(d.channels)};
    records.push_back(to_tensor(std::span<const double>(header)));
    records.push_back(to_tensor(weights.embed));
    records.push_back(to_tensor(weights.project));
    for (const auto& b : weights.blocks) {
        for (const auto& h : b.heads) {
            records.push_back(to_tensor(h.query));
            records.push_back(to_tensor(h.key));
            records.push_back(to_tensor(h.value));
        }
        records.push_back(to_tensor(b.output));
        records.push_back(to_tensor(b.feedforward));
    }
    write_lmpt_file(path, records);
}

ModelWeights load_model_weights(const std::filesystem::path& path) {
    const auto records = read_lmpt_file(path);
    const auto header = vector_from_tensor(records.at(0));
    if (header.size() != 5) throw IoError("model weights: header must hold 5 entries");
    ModelWeights m;
    m.dims = {static_cast<std::size_t>(header[0]), static_cast<std::size_t>(header[1]),
              static_cast<std::size_t>(header[2]), static_cast<std::size_t>(header[3]),
              static_cast<std::size_t>(header[4])};
    const std::size_t expected = 3 + m.dims.blocks * (3 * m.dims.heads + 2);
    if (records.size() != expected)
        throw IoError("model weights: expected " + std::to_string(expected) + " records, found " +
                      std::to_string(records.size()));
    std::size_t k = 1;
    m.embed = matrix_from_tensor(records[k++]);
    m.project = matrix_from_tensor(records[k++]);
    m.blocks.resize(m.dims.blocks);
    for (auto& b : m.blocks) {
        b.heads.resize(m.dims.heads);
        for (auto& h : b.heads) {
            h.query = matrix_from_tensor(records[k++]);
            h.key = matrix_from_tensor(records[k++]);
            h.value = matrix_from_tensor(records[k++]);
        }
        b.output = matrix_from_tensor(records[k++]);
        b.feedforward = matrix_from_tensor(records[k++]);
    }
    try {
        m.validate();
    } catch (const ShapeError& e) {
        throw IoError(std::string("model weights: ") + e.what());
    }
    return m;
}

Quadrants partition(const AttentionMap& map, std::size_t m, std::size_t n) {
    if (map.rows() != m + n || map.cols() < m + n)
        throw ShapeError("partition: map " + shape_string(map.values) + " does not fit m=" + std::to_string(m) +
                         ", n=" + std::to_string(n));
    Quadrants q{Matrix(m, m), Matrix(m, n), Matrix(n, m), Matrix(n, n)};
    for (std::size_t i = 0; i < m + n; ++i) {
        for (std::size_t j = 0; j < m + n; ++j) {
            const double v = map.values(i, j);
            if (i < m) {
                (j < m ? q.text_text(i, j) : q.text_video(i, j - m)) = v;
            } else {
                (j < m ? q.video_text(i - m, j) : q.video_video(i - m, j - m)) = v;
            }
        }
    }
    return q;
}

Matrix reassemble(const Quadrants& q) {
    return vstack(hstack(q.text_text, q.text_video), hstack(q.video_text, q.video_video));
}

double max_row_sum_error(const AttentionMap& map) {
    double worst = 0.0;
    for (std::size_t i = 0; i < map.rows(); ++i) {
        double s = 0.0;
        for (double v : map.values.row(i)) s += v;
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

namespace detail {

void softmax_rows(Matrix& logits) {
    for (std::size_t i = 0; i < logits.rows; ++i) {
        auto row = logits.row(i);
        if (row.empty()) continue;
        const double peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& v : row) {
            v = std::exp(v - peak);
            total += v;
        }
        for (double& v : row) v /= total;
    }
}

AttentionResult attend(const HiddenStates& h, const BlockWeights& w, std::span<const Matrix> extra_keys,
                       std::span<const Matrix> extra_values, std::size_t block_index) {
    w.validate();
    if (h.prompt.rows > 0 && h.prompt.cols != w.width())
        throw ShapeError(block_tag(block_index) + ": prompt width " + std::to_string(h.prompt.cols) +
                         " does not match weights width " + std::to_string(w.width()));
    if (h.video.cols != w.width())
        throw ShapeError(block_tag(block_index) + ": video width " + std::to_string(h.video.cols) +
                         " does not match weights width " + std::to_string(w.width()));
    const std::size_t heads = w.heads.size();
    const bool extended = !extra_keys.empty() || !extra_values.empty();
    if (extended && (extra_keys.size() != heads || extra_values.size() != heads))
        throw ShapeError(block_tag(block_index) + ": injected K/V must be given for every head");

    const std::size_t m = h.prompt.rows;
    const std::size_t n = h.video.rows;
    const std::size_t dk = w.head_width();
    const std::size_t r = extended ? extra_keys.front().rows : 0;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    const Matrix x = h.stacked();

    AttentionResult res;
    res.attention = {m, n, r, Matrix(m + n, m + n + r)};
    Matrix concat(m + n, heads * dk);
    for (std::size_t hd = 0; hd < heads; ++hd) {
        const auto& hw = w.heads[hd];
        Matrix q = matmul(x, hw.query);
        Matrix k = matmul(x, hw.key);
        Matrix v = matmul(x, hw.value);
        res.video_kv.push_back({slice_rows(k, m, m + n), slice_rows(v, m, m + n)});
        if (extended) {
            const Matrix& ek = extra_keys[hd];
            const Matrix& ev = extra_values[hd];
            if (ek.rows != r || ev.rows != r || ek.cols != dk || ev.cols != dk)
                throw ShapeError(block_tag(block_index) + ": injected K/V for head " + std::to_string(hd) +
                                 " must be " + std::to_string(r) + "x" + std::to_string(dk));
            k = vstack(k, ek);
            v = vstack(v, ev);
        }
        Matrix logits = matmul_bt(q, k);
        for (double& s : logits.data) s *= inv_sqrt_dk;
        if (!all_finite(logits)) throw NumericError(block_tag(block_index) + ": non-finite attention logits");
        softmax_rows(logits);
        Matrix out = matmul(logits, v);
        for (std::size_t i = 0; i < m + n; ++i)
            std::copy(out.row(i).begin(), out.row(i).end(), concat.row(i).begin() + static_cast<std::ptrdiff_t>(hd * dk));
        for (std::size_t i = 0; i < logits.data.size(); ++i) res.attention.values.data[i] += logits.data[i];
        res.head_maps.push_back(std::move(logits));
        res.head_outputs.push_back(std::move(out));
    }
    const double inv_heads = 1.0 / static_cast<double>(heads);
    for (double& a : res.attention.values.data) a *= inv_heads;

    Matrix mixed = matmul(concat, w.output);
    for (std::size_t i = 0; i < mixed.data.size(); ++i) mixed.data[i] += x.data[i];
    if (!all_finite(mixed)) throw NumericError(block_tag(block_index) + ": non-finite attention output");
    res.hidden = {slice_rows(mixed, 0, m), slice_rows(mixed, m, m + n)};
    return res;
}

}  // namespace detail

AttentionResult joint_attention(const HiddenStates& h, const BlockWeights& w, std::size_t block_index) {
    return detail::attend(h, w, {}, {}, block_index);
}

HiddenStates feedforward(const HiddenStates& h, const BlockWeights& w) {
    auto apply = [&](const Matrix& x) {
        if (x.rows == 0) return x;
        Matrix y = matmul(x, w.feedforward);
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] = x.data[i] + std::tanh(y.data[i]);
        return y;
    };
    return {apply(h.prompt), apply(h.video)};
}

}  // namespace lmp
