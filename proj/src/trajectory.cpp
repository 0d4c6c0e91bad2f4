// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <iostream>

#include "lmp/pipeline.hpp"

namespace lmp {

namespace {

double centered_pearson(const std::vector<double>& x, const std::vector<double>& y, const char* axis) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        std::cerr << "warning: constant " << axis << " centroid series; correlation taken as 0\n";
        return 0.0;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::vector<Centroid> centroid_trajectory(const ForegroundMask& mask) {
    mask.validate();
    const auto& layout = mask.layout;
    std::vector<Centroid> out;
    for (std::size_t f = 0; f < layout.frames; ++f) {
        const auto tokens = mask.frame_indices(f);
        if (tokens.empty()) throw ShapeError("centroid_trajectory: frame " + std::to_string(f) + " has no tokens");
        Centroid c;
        for (auto i : tokens) {
            const auto p = layout.position(i);
            c.row += static_cast<double>(p.row);
            c.col += static_cast<double>(p.col);
        }
        c.row /= static_cast<double>(tokens.size());
        c.col /= static_cast<double>(tokens.size());
        out.push_back(c);
    }
    return out;
}

std::vector<Centroid> centroid_trajectory(const SaliencyVolume& saliency) {
    const auto& layout = saliency.layout;
    if (saliency.values.size() != layout.token_count()) throw ShapeError("centroid_trajectory: saliency length mismatch");
    std::vector<Centroid> out;
    for (std::size_t f = 0; f < layout.frames; ++f) {
        Centroid c;
        double total = 0.0;
        for (std::size_t r = 0; r < layout.height; ++r) {
            for (std::size_t col = 0; col < layout.width; ++col) {
                const double v = saliency.at(f, r, col);
                if (v < 0.0 || !std::isfinite(v)) throw NumericError("centroid_trajectory: saliency must be finite and >= 0");
                c.row += v * static_cast<double>(r);
                c.col += v * static_cast<double>(col);
                total += v;
            }
        }
        if (total == 0.0) throw ShapeError("centroid_trajectory: frame " + std::to_string(f) + " has zero saliency");
        c.row /= total;
        c.col /= total;
        out.push_back(c);
    }
    return out;
}

double trajectory_similarity(const std::vector<Centroid>& a, const std::vector<Centroid>& b) {
    if (a.size() != b.size()) throw ShapeError("trajectory_similarity: length mismatch");
    if (a.size() < 2) throw ShapeError("trajectory_similarity: need at least two frames");
    std::vector<double> ar, ac, br, bc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ar.push_back(a[i].row);
        ac.push_back(a[i].col);
        br.push_back(b[i].row);
        bc.push_back(b[i].col);
    }
    return 0.5 * (centered_pearson(ar, br, "row") + centered_pearson(ac, bc, "column"));
}

}  // namespace lmp
