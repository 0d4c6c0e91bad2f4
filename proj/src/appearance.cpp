// SPDX-License-Identifier: Apache-2.0
#include "lmp/appearance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "lmp/fbdm.hpp"

namespace lmp {

namespace {

struct PooledEntry {
    double value;
    std::size_t row;
    std::size_t col;
};

// Subject rows over video columns, then video rows over subject columns.
std::vector<PooledEntry> pool_subject_entries(const Matrix& map, std::size_t m, std::span<const std::size_t> subject) {
    const std::size_t n = map.rows - m;
    std::vector<PooledEntry> pool;
    pool.reserve(2 * subject.size() * n);
    for (auto s : subject) {
        for (std::size_t j = 0; j < n; ++j) pool.push_back({map(s, m + j), s, m + j});
        for (std::size_t j = 0; j < n; ++j) pool.push_back({map(m + j, s), m + j, s});
    }
    return pool;
}

// Moves the k selected entries to the front in descending value order.
void select_top(std::vector<PooledEntry>& pool, std::size_t k) {
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(),
                      [](const PooledEntry& a, const PooledEntry& b) {
                          if (a.value != b.value) return a.value > b.value;
                          return a.row != b.row ? a.row < b.row : a.col < b.col;
                      });
}

void check_video(const AsmContext& ctx, const Matrix& video, const BlockWeights& w) {
    ctx.validate();
    w.validate();
    if (video.cols != w.width())
        throw ShapeError("asm: target video width " + std::to_string(video.cols) + " does not match block width " +
                         std::to_string(w.width()));
    if (ctx.prompt_queries.size() != w.heads.size())
        throw ShapeError("asm: context has " + std::to_string(ctx.prompt_queries.size()) + " heads, block has " +
                         std::to_string(w.heads.size()));
    for (std::size_t h = 0; h < w.heads.size(); ++h)
        if (ctx.prompt_queries[h].cols != w.head_width() || ctx.prompt_keys[h].cols != w.head_width())
            throw ShapeError("asm: reference prompt projections do not match d_k");
}

}  // namespace

void AsmContext::validate() const {
    if (prompt_queries.empty() || prompt_queries.size() != prompt_keys.size())
        throw ShapeError("asm context: per-head prompt queries/keys missing");
    for (std::size_t h = 0; h < prompt_queries.size(); ++h)
        if (prompt_queries[h].rows != prompt_len() || prompt_keys[h].rows != prompt_len())
            throw ShapeError("asm context: prompt projections disagree on m_ref");
    if (subject_indices.empty()) throw ShapeError("asm context: no reference subject indices");
    for (auto s : subject_indices)
        if (s >= prompt_len()) throw ShapeError("asm context: subject index " + std::to_string(s) + " out of range");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("asm context: fraction must lie in (0, 1]");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("asm context: beta must be finite and >= 0");
}

AsmContext make_asm_context(const Matrix& reference_prompt, const BlockWeights& w,
                            std::vector<std::size_t> subject_indices, double beta, double fraction) {
    AsmContext ctx;
    for (const auto& h : w.heads) {
        ctx.prompt_queries.push_back(matmul(reference_prompt, h.query));
        ctx.prompt_keys.push_back(matmul(reference_prompt, h.key));
    }
    ctx.subject_indices = std::move(subject_indices);
    ctx.beta = beta;
    ctx.fraction = fraction;
    ctx.validate();
    return ctx;
}

std::vector<Matrix> cross_prompt_attention_heads(const AsmContext& ctx, const Matrix& target_video,
                                                 const BlockWeights& w) {
    check_video(ctx, target_video, w);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(w.head_width()));
    std::vector<Matrix> maps;
    for (std::size_t h = 0; h < w.heads.size(); ++h) {
        const Matrix q = vstack(ctx.prompt_queries[h], matmul(target_video, w.heads[h].query));
        const Matrix k = vstack(ctx.prompt_keys[h], matmul(target_video, w.heads[h].key));
        Matrix a = matmul_bt(q, k);
        for (double& s : a.data) s *= inv_sqrt_dk;
        if (!all_finite(a)) throw NumericError("asm: non-finite cross-prompt logits");
        detail::softmax_rows(a);
        maps.push_back(std::move(a));
    }
    return maps;
}

AttentionMap cross_prompt_attention(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w) {
    const auto heads = cross_prompt_attention_heads(ctx, target_video, w);
    const std::size_t m = ctx.prompt_len();
    AttentionMap out{m, target_video.rows, 0, Matrix(m + target_video.rows, m + target_video.rows)};
    for (const auto& a : heads)
        for (std::size_t i = 0; i < a.data.size(); ++i) out.values.data[i] += a.data[i];
    const double inv = 1.0 / static_cast<double>(heads.size());
    for (double& v : out.values.data) v *= inv;
    return out;
}

double top_fraction_mean(std::span<const double> values, double fraction) {
    if (values.empty()) throw ShapeError("top_fraction_mean: empty list");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("top_fraction_mean: fraction must lie in (0, 1]");
    const std::size_t k = std::min(values.size(), fraction_count(fraction, values.size()));
    std::vector<double> sorted(values.begin(), values.end());
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += sorted[i];
    return sum / static_cast<double>(k);
}

double asm_loss(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w) {
    const auto heads = cross_prompt_attention_heads(ctx, target_video, w);
    double total = 0.0;
    for (const auto& a : heads) {
        const auto pool = pool_subject_entries(a, ctx.prompt_len(), ctx.subject_indices);
        std::vector<double> vals(pool.size());
        std::transform(pool.begin(), pool.end(), vals.begin(), [](const PooledEntry& e) { return e.value; });
        total += top_fraction_mean(vals, ctx.fraction);
    }
    return total / static_cast<double>(heads.size());
}

AsmGradient asm_loss_gradient(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w) {
    const auto heads = cross_prompt_attention_heads(ctx, target_video, w);
    const std::size_t m = ctx.prompt_len();
    const std::size_t n = target_video.rows;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(w.head_width()));
    const double inv_heads = 1.0 / static_cast<double>(heads.size());

    AsmGradient out{0.0, Matrix(n, target_video.cols)};
    if (n == 0) throw ShapeError("asm: target video has no tokens");
    double total_loss = 0.0;
    for (std::size_t h = 0; h < heads.size(); ++h) {
        const Matrix& a = heads[h];
        auto pool = pool_subject_entries(a, m, ctx.subject_indices);
        const std::size_t k = std::min(pool.size(), fraction_count(ctx.fraction, pool.size()));
        select_top(pool, k);

        // dL/dA: 1/k on each selected entry.
        Matrix g(m + n, m + n);
        double loss = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            loss += pool[i].value;
            g(pool[i].row, pool[i].col) = 1.0 / static_cast<double>(k);
        }
        total_loss += loss / static_cast<double>(k);

        // Softmax backward, row by row: dS = A .* (G - <G, A>_row).
        Matrix ds(m + n, m + n);
        for (std::size_t i = 0; i < m + n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < m + n; ++j) dot += g(i, j) * a(i, j);
            for (std::size_t j = 0; j < m + n; ++j) ds(i, j) = a(i, j) * (g(i, j) - dot) * inv_sqrt_dk;
        }

        const auto& hw = w.heads[h];
        const Matrix q = vstack(ctx.prompt_queries[h], matmul(target_video, hw.query));
        const Matrix key = vstack(ctx.prompt_keys[h], matmul(target_video, hw.key));
        const Matrix dq = slice_rows(matmul(ds, key), m, m + n);   // n x d_k
        const Matrix dk = slice_rows(matmul_at(ds, q), m, m + n);  // n x d_k
        const Matrix dx = matmul_bt(dq, hw.query);
        const Matrix dx_k = matmul_bt(dk, hw.key);
        for (std::size_t i = 0; i < dx.data.size(); ++i) out.gradient.data[i] += (dx.data[i] + dx_k.data[i]) * inv_heads;
    }
    out.loss = total_loss / static_cast<double>(heads.size());
    if (!all_finite(out.gradient)) throw NumericError("asm: non-finite gradient");
    return out;
}

AsmStepResult asm_step_with_loss(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w) {
    const AsmGradient g = asm_loss_gradient(ctx, target_video, w);
    AsmStepResult out{target_video, g.loss};
    if (ctx.beta == 0.0) return out;
    for (std::size_t i = 0; i < out.hidden.data.size(); ++i) out.hidden.data[i] -= ctx.beta * g.gradient.data[i];
    if (!all_finite(out.hidden)) throw NumericError("asm: non-finite hidden states after step");
    return out;
}

Matrix asm_step(const AsmContext& ctx, const Matrix& target_video, const BlockWeights& w) {
    return asm_step_with_loss(ctx, target_video, w).hidden;
}

}  // namespace lmp
