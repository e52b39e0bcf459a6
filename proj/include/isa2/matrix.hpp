#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace isa2 {

/// Dense row-major matrix of doubles. Rows are samples, columns are features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    /// Appends a row; the first row fixes the column count.
    void push_row(std::span<const double> values);

    /// Copy of the given rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> indices) const;

    /// Copy of the first `count` columns.
    Matrix leading_columns(std::size_t count) const;

    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// Solves A x = b for symmetric positive-definite A (n×n) via Cholesky.
/// Throws NumericalError when a pivot is not safely positive.
std::vector<double> cholesky_solve(const Matrix& a, std::span<const double> b);

}  // namespace isa2
