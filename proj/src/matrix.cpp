#include "isa2/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isa2/error.hpp"

namespace isa2 {

void Matrix::push_row(std::span<const double> values) {
    if (rows_ == 0 && data_.empty()) {
        cols_ = values.size();
    } else if (values.size() != cols_) {
        throw std::invalid_argument("push_row: column count mismatch");
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix Matrix::leading_columns(std::size_t count) const {
    if (count > cols_) throw std::invalid_argument("leading_columns: count exceeds width");
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r) {
        const auto src = row(r);
        std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(count), out.row(r).begin());
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

std::vector<double> cholesky_solve(const Matrix& a, std::span<const double> b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) {
        throw std::invalid_argument("cholesky_solve: shape mismatch");
    }
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
    // Pivots below this are indistinguishable from rank deficiency.
    const double pivot_floor = std::max(max_diag, 1.0) * 1e-13 * static_cast<double>(std::max<std::size_t>(n, 1));

    Matrix lower(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= lower(j, k) * lower(j, k);
        if (!(diag > pivot_floor)) {
            throw NumericalError("matrix is singular or not positive definite (pivot " +
                                 std::to_string(j) + ")");
        }
        const double ljj = std::sqrt(diag);
        lower(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double sum = a(i, j);
            for (std::size_t k = 0; k < j; ++k) sum -= lower(i, k) * lower(j, k);
            lower(i, j) = sum / ljj;
        }
    }

    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        double sum = x[i];
        for (std::size_t k = 0; k < i; ++k) sum -= lower(i, k) * x[k];
        x[i] = sum / lower(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double sum = x[i];
        for (std::size_t k = i + 1; k < n; ++k) sum -= lower(k, i) * x[k];
        x[i] = sum / lower(i, i);
    }
    return x;
}

}  // namespace isa2
