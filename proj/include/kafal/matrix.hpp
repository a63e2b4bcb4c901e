#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace kafal {

// Dense row-major matrix of doubles. Just enough linear algebra for an MLP.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Gather the given rows of `src` into a new contiguous matrix.
template <typename Index>
Matrix gather_rows(const Matrix& src, const std::vector<Index>& rows) {
    Matrix out(rows.size(), src.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto r = src.row(static_cast<std::size_t>(rows[i]));
        std::copy(r.begin(), r.end(), out.row(i).begin());
    }
    return out;
}

} // namespace kafal
