#pragma once

// Small row-major dense matrices and a Cholesky factorization. Sized for
// k x k systems (k = feature count), not for n x k data.

#include <oproj/errors.hpp>

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace oproj {

class DenseMatrix
{
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {}

    static DenseMatrix identity(std::size_t n)
    {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Lower-triangular L with A = L L^T, or nullopt when A is not (numerically)
/// symmetric positive definite.
inline std::optional<DenseMatrix> cholesky(const DenseMatrix& A)
{
    if (A.rows() != A.cols())
        throw DimensionError("cholesky: matrix is not square");
    const std::size_t n = A.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(A(i, j) - A(j, i)) > 1e-12 * (std::abs(A(i, j)) + std::abs(A(j, i)) + 1.0))
                return std::nullopt;
    DenseMatrix L(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = A(j, j);
        for (std::size_t p = 0; p < j; ++p)
            d -= L(j, p) * L(j, p);
        if (!(d > 0.0) || !std::isfinite(d))
            return std::nullopt;
        L(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A(i, j);
            for (std::size_t p = 0; p < j; ++p)
                s -= L(i, p) * L(j, p);
            L(i, j) = s / L(j, j);
        }
    }
    return L;
}

/// Solves L L^T x = b.
inline std::vector<double> cholesky_solve(const DenseMatrix& L, std::vector<double> b)
{
    const std::size_t n = L.rows();
    if (b.size() != n)
        throw DimensionError("cholesky_solve: right-hand side length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < i; ++p)
            b[i] -= L(i, p) * b[p];
        b[i] /= L(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t p = i + 1; p < n; ++p)
            b[i] -= L(p, i) * b[p];
        b[i] /= L(i, i);
    }
    return b;
}

} // namespace oproj
