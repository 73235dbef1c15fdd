#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nvolve/error.hpp"

namespace nvolve {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != r * c) throw ShapeError("matrix storage", r * c, data.size());
    }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) noexcept { return std::span<double>(data).subspan(i * cols, cols); }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(data).subspan(i * cols, cols);
    }

    [[nodiscard]] std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows);
        for (std::size_t i = 0; i < rows; ++i) out[i] = (*this)(i, j);
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace nvolve
