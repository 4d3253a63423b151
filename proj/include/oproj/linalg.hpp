#pragma once

// Dense column vectors, column-oriented feature matrices and the orthogonal
// projection primitives used to strip one feature's footprint out of the
// others.

#include <oproj/errors.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace oproj {

using TargetVector = std::vector<double>;

/// A named column of n samples.
struct FeatureVector
{
    std::string name;
    std::vector<double> values;

    FeatureVector() = default;
    FeatureVector(std::string n, std::vector<double> v) : name(std::move(n)), values(std::move(v)) {}

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::span<const double> span() const noexcept { return values; }
};

inline bool all_finite(std::span<const double> v)
{
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

/// n samples by k uniquely named numeric features, stored by column.
///
/// Construction validates the invariants: k >= 1, n >= 2, equal column
/// lengths, unique names and finite entries.
class FeatureMatrix
{
public:
    FeatureMatrix() = default;

    explicit FeatureMatrix(std::vector<FeatureVector> columns) : columns_(std::move(columns))
    {
        if (columns_.empty())
            throw DimensionError("feature matrix needs at least one column");
        rows_ = columns_.front().size();
        if (rows_ < 2)
            throw DimensionError("feature matrix needs at least two samples");
        std::unordered_set<std::string> seen;
        for (const auto& c : columns_) {
            if (c.size() != rows_)
                throw DimensionError("column '" + c.name + "' has " + std::to_string(c.size()) +
                                     " rows, expected " + std::to_string(rows_));
            if (!seen.insert(c.name).second)
                throw DataError("duplicate column name '" + c.name + "'");
            for (std::size_t i = 0; i < rows_; ++i)
                if (!std::isfinite(c.values[i]))
                    throw DataError("non-finite value in column '" + c.name + "' at row " +
                                    std::to_string(i));
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return columns_.size(); }

    const FeatureVector& column(std::size_t j) const { return columns_.at(j); }
    const std::vector<FeatureVector>& columns() const noexcept { return columns_; }

    const FeatureVector& column(const std::string& name) const { return columns_[index_of(name)]; }

    std::size_t index_of(const std::string& name) const
    {
        for (std::size_t j = 0; j < columns_.size(); ++j)
            if (columns_[j].name == name)
                return j;
        throw LookupError("unknown feature '" + name + "'");
    }

    bool contains(const std::string& name) const noexcept
    {
        for (const auto& c : columns_)
            if (c.name == name)
                return true;
        return false;
    }

    std::vector<std::string> names() const
    {
        std::vector<std::string> out;
        out.reserve(columns_.size());
        for (const auto& c : columns_)
            out.push_back(c.name);
        return out;
    }

    double operator()(std::size_t row, std::size_t col) const { return columns_[col].values[row]; }

private:
    std::vector<FeatureVector> columns_;
    std::size_t rows_ = 0;
};

/// Mutually orthonormal vectors spanning a subspace to remove.
struct ProjectionBasis
{
    std::vector<FeatureVector> vectors;
    std::size_t dropped_count = 0;

    std::size_t size() const noexcept { return vectors.size(); }
};

inline constexpr double kDefaultDropTol = 1e-10;

inline double dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw DimensionError("dot: length mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double dot(const FeatureVector& a, const FeatureVector& b) { return dot(a.span(), b.span()); }

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }
inline double norm(const FeatureVector& a) { return norm(a.span()); }

// Vectors with norm below this are treated as zero.
inline double zero_norm_tolerance(std::size_t n) { return 1e-12 * std::sqrt(static_cast<double>(n)); }

/// v - (u.v / u.u) u, keeping v's name.
inline FeatureVector project_out(const FeatureVector& v, const FeatureVector& u)
{
    if (v.size() != u.size())
        throw DimensionError("project_out: length mismatch");
    const double uu = dot(u, u);
    if (!(std::sqrt(uu) > zero_norm_tolerance(u.size())))
        throw DegenerateFeatureError(u.name, "zero-norm vector cannot define a projection");
    const double coeff = dot(u, v) / uu;
    FeatureVector out{v.name, v.values};
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] -= coeff * u.values[i];
    return out;
}

namespace detail {

// v <- v - (v.e) e for every unit vector e, in order.
inline void subtract_projections(std::vector<double>& v, const std::vector<FeatureVector>& basis)
{
    for (const auto& e : basis) {
        const double c = dot(std::span<const double>(v), e.span());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] -= c * e.values[i];
    }
}

} // namespace detail

/// Modified Gram-Schmidt with one full re-orthogonalization pass.
///
/// A candidate whose residual norm falls below drop_tol times its original
/// norm is discarded and counted in dropped_count. Zero candidates are
/// always dropped.
inline ProjectionBasis orthonormalize(const std::vector<FeatureVector>& candidates,
                                      double drop_tol = kDefaultDropTol)
{
    if (candidates.empty())
        throw DimensionError("orthonormalize: empty candidate list");
    const std::size_t n = candidates.front().size();
    for (const auto& c : candidates)
        if (c.size() != n)
            throw DimensionError("orthonormalize: candidates have different lengths");

    ProjectionBasis basis;
    for (const auto& c : candidates) {
        const double original = norm(c);
        if (!(original > zero_norm_tolerance(n))) {
            ++basis.dropped_count;
            continue;
        }
        std::vector<double> r = c.values;
        detail::subtract_projections(r, basis.vectors);
        detail::subtract_projections(r, basis.vectors);
        const double residual = norm(r);
        if (residual < drop_tol * original) {
            ++basis.dropped_count;
            continue;
        }
        for (double& x : r)
            x /= residual;
        basis.vectors.emplace_back(c.name, std::move(r));
    }
    if (basis.vectors.empty())
        throw DegenerateSubspaceError("orthonormalize: every candidate was dropped (" +
                                      std::to_string(basis.dropped_count) + " of " +
                                      std::to_string(candidates.size()) + ")");
    return basis;
}

/// Removes `current` and projects every remaining column onto the orthogonal
/// complement of span(basis). Column order and names are preserved.
inline FeatureMatrix transform_against_feature(const FeatureMatrix& X, const std::string& current,
                                               const ProjectionBasis& basis)
{
    const std::size_t skip = X.index_of(current);
    for (const auto& e : basis.vectors)
        if (e.size() != X.rows())
            throw DimensionError("basis vector '" + e.name + "' does not match sample count");

    std::vector<FeatureVector> out;
    out.reserve(X.cols() - 1);
    for (std::size_t j = 0; j < X.cols(); ++j) {
        if (j == skip)
            continue;
        FeatureVector v = X.column(j);
        // Twice against an orthonormal basis keeps the residual orthogonal even
        // when v lies almost entirely inside the span.
        detail::subtract_projections(v.values, basis.vectors);
        detail::subtract_projections(v.values, basis.vectors);
        out.push_back(std::move(v));
    }
    if (out.empty())
        return FeatureMatrix{};
    return FeatureMatrix(std::move(out));
}

/// Single-vector form: x_i - (x_c.x_i / x_c.x_c) x_c for every other column.
inline FeatureMatrix transform_against_feature(const FeatureMatrix& X, const std::string& current)
{
    const std::size_t skip = X.index_of(current);
    const FeatureVector& u = X.column(skip);
    std::vector<FeatureVector> out;
    out.reserve(X.cols() - 1);
    for (std::size_t j = 0; j < X.cols(); ++j) {
        if (j == skip)
            continue;
        out.push_back(project_out(X.column(j), u));
    }
    if (out.empty())
        return FeatureMatrix{};
    return FeatureMatrix(std::move(out));
}

} // namespace oproj
