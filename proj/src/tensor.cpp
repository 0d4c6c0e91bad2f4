// SPDX-License-Identifier: Apache-2.0
#include "lmp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace lmp {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m;
    m.rows = rows.size();
    m.cols = rows.size() == 0 ? 0 : rows.begin()->size();
    m.data.reserve(m.rows * m.cols);
    for (const auto& r : rows) {
        if (r.size() != m.cols) throw ShapeError("from_rows: ragged initializer");
        m.data.insert(m.data.end(), r.begin(), r.end());
    }
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: " + shape_string(a) + " x " + shape_string(b));
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* o = &out.data[i * out.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double s = a(i, k);
            const double* br = &b.data[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) o[j] += s * br[j];
        }
    }
    return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw ShapeError("matmul_bt: " + shape_string(a) + " x " + shape_string(b) + "^T");
    Matrix out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ar = &a.data[i * a.cols];
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* br = &b.data[j * b.cols];
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += ar[k] * br[k];
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw ShapeError("matmul_at: " + shape_string(a) + "^T x " + shape_string(b));
    Matrix out(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* ar = &a.data[k * a.cols];
        const double* br = &b.data[k * b.cols];
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double s = ar[i];
            double* o = &out.data[i * out.cols];
            for (std::size_t j = 0; j < b.cols; ++j) o[j] += s * br[j];
        }
    }
    return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.rows == 0) return bottom;
    if (bottom.rows == 0) return top;
    if (top.cols != bottom.cols) throw ShapeError("vstack: " + shape_string(top) + " over " + shape_string(bottom));
    Matrix out = top;
    out.rows += bottom.rows;
    out.data.insert(out.data.end(), bottom.data.begin(), bottom.data.end());
    return out;
}

Matrix hstack(const Matrix& left, const Matrix& right) {
    if (left.rows != right.rows) throw ShapeError("hstack: " + shape_string(left) + " beside " + shape_string(right));
    Matrix out(left.rows, left.cols + right.cols);
    for (std::size_t i = 0; i < left.rows; ++i) {
        std::copy(left.row(i).begin(), left.row(i).end(), out.row(i).begin());
        std::copy(right.row(i).begin(), right.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(left.cols));
    }
    return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
    if (begin > end || end > m.rows) throw ShapeError("slice_rows: range out of bounds for " + shape_string(m));
    Matrix out(end - begin, m.cols);
    std::copy(m.data.begin() + static_cast<std::ptrdiff_t>(begin * m.cols),
              m.data.begin() + static_cast<std::ptrdiff_t>(end * m.cols), out.data.begin());
    return out;
}

Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t end) {
    if (begin > end || end > m.cols) throw ShapeError("slice_cols: range out of bounds for " + shape_string(m));
    Matrix out(m.rows, end - begin);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = m(i, j);
    return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), m.cols);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= m.rows)
            throw ShapeError("gather_rows: index " + std::to_string(indices[k]) + " out of range for " + shape_string(m));
        std::copy(m.row(indices[k]).begin(), m.row(indices[k]).end(), out.row(k).begin());
    }
    return out;
}

Matrix scaled(const Matrix& m, double factor) {
    Matrix out = m;
    for (double& v : out.data) v *= factor;
    return out;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("max_abs_diff: length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

std::string shape_string(const Matrix& m) {
    return "(" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ")";
}

}  // namespace lmp
