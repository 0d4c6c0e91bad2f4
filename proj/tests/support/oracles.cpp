// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "lmp/rng.hpp"

namespace lmp::oracle {

namespace {

Matrix project_rows(const Matrix& x, const Matrix& w) {
    Matrix out(x.rows, w.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t c = 0; c < w.cols; ++c) {
            double acc = 0.0;
            for (std::size_t a = 0; a < x.cols; ++a) acc += x(i, a) * w(a, c);
            out(i, c) = acc;
        }
    return out;
}

}  // namespace

DenseAttention dense_attention(const HiddenStates& h, const BlockWeights& w, const std::vector<Matrix>& ref_keys,
                               const std::vector<Matrix>& ref_values, double key_scale) {
    const std::size_t m = h.prompt.rows;
    const std::size_t n = h.video.rows;
    const std::size_t d = w.width();
    const std::size_t dk = w.head_width();
    const std::size_t heads = w.heads.size();
    const std::size_t r = ref_keys.empty() ? 0 : ref_keys[0].rows;

    Matrix x(m + n, d);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < d; ++a) x(i, a) = h.prompt(i, a);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) x(m + i, a) = h.video(i, a);

    DenseAttention out;
    out.mean_map = Matrix(m + n, m + n + r);
    Matrix concat(m + n, heads * dk);
    for (std::size_t hd = 0; hd < heads; ++hd) {
        const Matrix q = project_rows(x, w.heads[hd].query);
        const Matrix k = project_rows(x, w.heads[hd].key);
        const Matrix v = project_rows(x, w.heads[hd].value);
        Matrix a(m + n, m + n + r);
        for (std::size_t i = 0; i < m + n; ++i) {
            double denom = 0.0;
            for (std::size_t j = 0; j < m + n + r; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dk; ++c)
                    dot += q(i, c) * (j < m + n ? k(j, c) : ref_keys[hd](j - m - n, c));
                if (j >= m + n) dot *= key_scale;
                a(i, j) = std::exp(dot / std::sqrt(static_cast<double>(dk)));
                denom += a(i, j);
            }
            for (std::size_t j = 0; j < m + n + r; ++j) a(i, j) /= denom;
        }
        Matrix o(m + n, dk);
        for (std::size_t i = 0; i < m + n; ++i)
            for (std::size_t c = 0; c < dk; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < m + n + r; ++j)
                    acc += a(i, j) * (j < m + n ? v(j, c) : ref_values[hd](j - m - n, c));
                o(i, c) = acc;
                concat(i, hd * dk + c) = acc;
            }
        for (std::size_t i = 0; i < a.data.size(); ++i) out.mean_map.data[i] += a.data[i] / static_cast<double>(heads);
        out.head_maps.push_back(a);
        out.head_outputs.push_back(o);
    }
    out.hidden = project_rows(concat, w.output);
    for (std::size_t i = 0; i < out.hidden.data.size(); ++i) out.hidden.data[i] += x.data[i];
    return out;
}

std::vector<Matrix> dense_cross_prompt(const std::vector<Matrix>& prompt_queries,
                                       const std::vector<Matrix>& prompt_keys, const Matrix& video,
                                       const BlockWeights& w) {
    std::vector<Matrix> maps;
    const std::size_t dk = w.head_width();
    for (std::size_t hd = 0; hd < w.heads.size(); ++hd) {
        const Matrix qv = project_rows(video, w.heads[hd].query);
        const Matrix kv = project_rows(video, w.heads[hd].key);
        const std::size_t m = prompt_queries[hd].rows;
        const std::size_t total = m + video.rows;
        auto q_at = [&](std::size_t i, std::size_t c) { return i < m ? prompt_queries[hd](i, c) : qv(i - m, c); };
        auto k_at = [&](std::size_t j, std::size_t c) { return j < m ? prompt_keys[hd](j, c) : kv(j - m, c); };
        Matrix a(total, total);
        for (std::size_t i = 0; i < total; ++i) {
            double denom = 0.0;
            for (std::size_t j = 0; j < total; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dk; ++c) dot += q_at(i, c) * k_at(j, c);
                a(i, j) = std::exp(dot / std::sqrt(static_cast<double>(dk)));
                denom += a(i, j);
            }
            for (std::size_t j = 0; j < total; ++j) a(i, j) /= denom;
        }
        maps.push_back(a);
    }
    return maps;
}

double sorted_top_mean(std::vector<double> values, std::size_t k) {
    std::sort(values.begin(), values.end(), [](double a, double b) { return a > b; });
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += values[i];
    return sum / static_cast<double>(k);
}

std::size_t ceil_ratio(std::size_t num, std::size_t den, std::size_t n) { return (num * n + den - 1) / den; }

double asm_loss(const std::vector<Matrix>& prompt_queries, const std::vector<Matrix>& prompt_keys,
                const std::vector<std::size_t>& subject, const Matrix& video, const BlockWeights& w,
                std::size_t fraction_num, std::size_t fraction_den) {
    const auto maps = dense_cross_prompt(prompt_queries, prompt_keys, video, w);
    const std::size_t m = prompt_queries[0].rows;
    double total = 0.0;
    for (const auto& a : maps) {
        std::vector<double> pool;
        for (auto s : subject)
            for (std::size_t j = 0; j < video.rows; ++j) {
                pool.push_back(a(s, m + j));
                pool.push_back(a(m + j, s));
            }
        total += sorted_top_mean(pool, ceil_ratio(fraction_num, fraction_den, pool.size()));
    }
    return total / static_cast<double>(maps.size());
}

Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double step) {
    Matrix g(x.rows, x.cols);
    Matrix probe = x;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        probe.data[i] = x.data[i] + step;
        const double up = f(probe);
        probe.data[i] = x.data[i] - step;
        const double down = f(probe);
        probe.data[i] = x.data[i];
        g.data[i] = (up - down) / (2.0 * step);
    }
    return g;
}

std::vector<double> saliency(const std::vector<AttentionMap>& maps, const std::vector<std::size_t>& subject,
                             std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (const auto& map : maps)
            for (auto s : subject) acc += map.values(s, map.prompt_len + j) + map.values(map.prompt_len + j, s);
        out[j] = acc / static_cast<double>(maps.size());
    }
    return out;
}

std::vector<std::size_t> select_sorted(const std::vector<double>& values, const TokenLayout& layout, std::size_t k) {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < layout.frames; ++f) {
        std::vector<std::pair<double, std::size_t>> frame;
        for (std::size_t i = 0; i < layout.frame_size(); ++i) {
            const std::size_t idx = f * layout.frame_size() + i;
            frame.emplace_back(values[idx], idx);
        }
        std::sort(frame.begin(), frame.end(), [](const auto& a, const auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        std::vector<std::size_t> chosen;
        for (std::size_t i = 0; i < k; ++i) chosen.push_back(frame[i].second);
        std::sort(chosen.begin(), chosen.end());
        out.insert(out.end(), chosen.begin(), chosen.end());
    }
    return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

AttentionMap random_attention_map(std::size_t m, std::size_t n, std::size_t r, std::uint64_t seed) {
    Rng rng(seed, 77);
    AttentionMap map{m, n, r, Matrix(m + n, m + n + r)};
    for (std::size_t i = 0; i < m + n; ++i) {
        double total = 0.0;
        for (auto& v : map.values.row(i)) {
            v = rng.uniform() + 1e-3;
            total += v;
        }
        for (auto& v : map.values.row(i)) v /= total;
    }
    return map;
}

}  // namespace lmp::oracle
