#pragma once

// Stand-in models for black boxes that cannot be re-queried: ridge
// regression (closed form) and logistic regression (full-batch gradient
// descent), plus held-out fidelity scoring.

#include <oproj/data_io.hpp>
#include <oproj/dense.hpp>
#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>
#include <oproj/model.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace oproj {

inline constexpr double kDefaultRidgeLambda = 1e-3;

struct RidgeModel
{
    std::vector<std::string> feature_names;
    std::vector<double> coefficients;
    double intercept = 0.0;
    double lambda = 0.0;
    double fit_r2 = 0.0;
    std::vector<std::string> warnings;

    double predict_row(const FeatureMatrix& X, std::size_t i) const
    {
        double s = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j)
            s += coefficients[j] * X(i, j);
        return s;
    }

    TargetVector predict(const FeatureMatrix& X) const
    {
        TargetVector y(X.rows());
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = predict_row(X, i);
        return y;
    }
};

struct LogisticTraining
{
    std::size_t iterations = 0;
    double final_gradient_norm = 0.0; // max-norm
    bool converged = false;
    std::vector<double> loss_history; // loss before each step, then the final loss
};

struct LogisticModel
{
    std::vector<std::string> feature_names;
    std::vector<double> coefficients;
    double intercept = 0.0;
    LogisticTraining training;

    double probability_row(const FeatureMatrix& X, std::size_t i) const
    {
        double s = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j)
            s += coefficients[j] * X(i, j);
        return 1.0 / (1.0 + std::exp(-s));
    }

    TargetVector predict(const FeatureMatrix& X) const
    {
        TargetVector p(X.rows());
        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] = probability_row(X, i);
        return p;
    }
};

inline double r_squared(std::span<const double> pred, std::span<const double> y)
{
    if (pred.size() != y.size() || y.empty())
        throw DimensionError("r2: length mismatch");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - pred[i]) * (y[i] - pred[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0)
        return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

/// Augmented normal equations for [X 1]: the system (A^T A + lambda D) w = A^T y
/// with D = diag(1, ..., 1, 0) so the intercept is unpenalized.
struct NormalEquations
{
    DenseMatrix lhs;
    std::vector<double> rhs;
};

inline NormalEquations ridge_normal_equations(const FeatureMatrix& X, std::span<const double> y,
                                              double lambda)
{
    const std::size_t k = X.cols(), n = X.rows();
    NormalEquations ne{DenseMatrix(k + 1, k + 1), std::vector<double>(k + 1, 0.0)};
    auto col = [&](std::size_t j) -> std::span<const double> {
        static const std::vector<double> none;
        return j < k ? X.column(j).span() : std::span<const double>(none);
    };
    for (std::size_t a = 0; a <= k; ++a) {
        for (std::size_t b = a; b <= k; ++b) {
            double s = 0.0;
            if (a < k && b < k)
                s = dot(col(a), col(b));
            else if (a < k)
                s = std::accumulate(col(a).begin(), col(a).end(), 0.0);
            else
                s = static_cast<double>(n);
            ne.lhs(a, b) = s;
            ne.lhs(b, a) = s;
        }
        ne.rhs[a] = a < k ? dot(col(a), y) : std::accumulate(y.begin(), y.end(), 0.0);
    }
    for (std::size_t j = 0; j < k; ++j)
        ne.lhs(j, j) += lambda;
    return ne;
}

/// Closed-form ridge fit via Cholesky of the augmented normal equations.
inline RidgeModel fit_ridge(const FeatureMatrix& X, std::span<const double> y,
                            double lambda = kDefaultRidgeLambda)
{
    if (y.size() != X.rows())
        throw DimensionError("fit_ridge: target length does not match sample count");
    if (!(lambda >= 0.0))
        throw SpecError("fit_ridge: lambda must be non-negative");
    RidgeModel m;
    m.feature_names = X.names();
    m.lambda = lambda;
    if (X.rows() <= X.cols())
        m.warnings.push_back("ridge fit with n <= k (" + std::to_string(X.rows()) + " <= " +
                             std::to_string(X.cols()) + ")");

    const auto ne = ridge_normal_equations(X, y, lambda);
    const auto L = cholesky(ne.lhs);
    if (!L) {
        throw SolverError(lambda == 0.0
                              ? "fit_ridge: normal equations are singular; use lambda > 0"
                              : "fit_ridge: normal equations are not positive definite");
    }
    auto w = cholesky_solve(*L, ne.rhs);
    // One step of iterative refinement tightens the normal-equation residual.
    {
        std::vector<double> r(ne.rhs);
        for (std::size_t a = 0; a < r.size(); ++a)
            for (std::size_t b = 0; b < r.size(); ++b)
                r[a] -= ne.lhs(a, b) * w[b];
        const auto dw = cholesky_solve(*L, r);
        for (std::size_t a = 0; a < w.size(); ++a)
            w[a] += dw[a];
    }
    if (lambda == 0.0) {
        // Guard against a numerically singular system that Cholesky let through.
        double dmin = (*L)(0, 0), dmax = (*L)(0, 0);
        for (std::size_t a = 0; a < L->rows(); ++a) {
            dmin = std::min(dmin, (*L)(a, a));
            dmax = std::max(dmax, (*L)(a, a));
        }
        if (dmin < 1e-7 * dmax)
            throw SolverError("fit_ridge: normal equations are singular; use lambda > 0");
    }
    m.intercept = w.back();
    w.pop_back();
    m.coefficients = std::move(w);
    const auto pred = m.predict(X);
    m.fit_r2 = r_squared(pred, y);
    return m;
}

struct LogisticOptions
{
    std::size_t max_iter = 500;
    double step = 0.1;
    double tolerance = 1e-6; // on the gradient max-norm
};

inline double mean_log_loss(const LogisticModel& m, const FeatureMatrix& X, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double z = m.intercept;
        for (std::size_t j = 0; j < m.coefficients.size(); ++j)
            z += m.coefficients[j] * X(i, j);
        // log(1 + e^z) - y z, evaluated stably.
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        s += softplus - y[i] * z;
    }
    return s / static_cast<double>(X.rows());
}

/// Full-batch gradient descent on the mean log-loss. Hitting the iteration
/// cap is not an error; training.converged reports it.
inline LogisticModel fit_logistic(const FeatureMatrix& X, std::span<const double> y,
                                  const LogisticOptions& opt = {})
{
    if (y.size() != X.rows())
        throw DimensionError("fit_logistic: target length does not match sample count");
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0)
            throw DataError("fit_logistic: target must be 0/1, row " + std::to_string(i) + " is " +
                            std::to_string(y[i]));
    if (!(opt.step > 0.0))
        throw SpecError("fit_logistic: step must be positive");

    const std::size_t k = X.cols(), n = X.rows();
    LogisticModel m;
    m.feature_names = X.names();
    m.coefficients.assign(k, 0.0);

    std::vector<double> grad(k + 1);
    auto gradient = [&] {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = m.probability_row(X, i) - y[i];
            for (std::size_t j = 0; j < k; ++j)
                grad[j] += r * X(i, j);
            grad[k] += r;
        }
        double mx = 0.0;
        for (auto& g : grad) {
            g /= static_cast<double>(n);
            mx = std::max(mx, std::abs(g));
        }
        return mx;
    };

    double gnorm = gradient();
    std::size_t it = 0;
    while (gnorm > opt.tolerance && it < opt.max_iter) {
        m.training.loss_history.push_back(mean_log_loss(m, X, y));
        for (std::size_t j = 0; j < k; ++j)
            m.coefficients[j] -= opt.step * grad[j];
        m.intercept -= opt.step * grad[k];
        ++it;
        gnorm = gradient();
    }
    m.training.loss_history.push_back(mean_log_loss(m, X, y));
    m.training.iterations = it;
    m.training.final_gradient_norm = gnorm;
    m.training.converged = gnorm <= opt.tolerance;
    return m;
}

// ---------------------------------------------------------------------------
// Fidelity

enum class FidelityKind { r2, agreement };

struct FidelityScore
{
    FidelityKind kind = FidelityKind::r2;
    double value = 0.0;
    std::uint64_t split_seed = 0;
    std::size_t train_rows = 0;
    std::size_t holdout_rows = 0;
};

struct TrainTestSplit
{
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded shuffle; the last 20% (at least one row) is held out.
inline TrainTestSplit split_rows(std::size_t n, std::uint64_t seed, double holdout = 0.2)
{
    if (n < 2)
        throw DimensionError("split: need at least two rows");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit draw so the order is stable across
    // standard library implementations.
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    std::size_t test = static_cast<std::size_t>(std::llround(holdout * static_cast<double>(n)));
    test = std::clamp<std::size_t>(test, 1, n - 1);
    TrainTestSplit s;
    s.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(test));
    s.test.assign(idx.end() - static_cast<std::ptrdiff_t>(test), idx.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

inline FeatureMatrix select_rows(const FeatureMatrix& X, const std::vector<std::size_t>& rows)
{
    std::vector<FeatureVector> cols;
    for (const auto& c : X.columns()) {
        std::vector<double> v(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            v[i] = c.values[rows[i]];
        cols.emplace_back(c.name, std::move(v));
    }
    return FeatureMatrix(std::move(cols));
}

inline TargetVector select_rows(std::span<const double> y, const std::vector<std::size_t>& rows)
{
    TargetVector out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out[i] = y[rows[i]];
    return out;
}

using SurrogateModel = std::variant<RidgeModel, LogisticModel>;

/// In-process, concurrent, score-mode handle over a fitted surrogate.
/// When `input_maps` is non-empty the handle standardizes incoming columns
/// with them before evaluating (the model was fitted on standardized data).
class SurrogateHandle final : public ModelHandle
{
public:
    SurrogateHandle(SurrogateModel model, std::vector<AffineMap> input_maps = {})
        : ModelHandle(std::visit([](const auto& m) { return m.feature_names; }, model)),
          model_(std::move(model)), maps_(std::move(input_maps))
    {}

    ModelKind kind() const noexcept override { return ModelKind::surrogate; }
    bool supports_concurrent_queries() const noexcept override { return true; }

    const SurrogateModel& model() const noexcept { return model_; }

protected:
    TargetVector do_predict(const FeatureMatrix& X) const override
    {
        if (maps_.empty())
            return std::visit([&](const auto& m) { return m.predict(X); }, model_);
        std::vector<FeatureVector> cols;
        for (std::size_t j = 0; j < X.cols(); ++j)
            cols.push_back(apply_forward(X.column(j), maps_.at(j)));
        const FeatureMatrix Z(std::move(cols));
        return std::visit([&](const auto& m) { return m.predict(Z); }, model_);
    }

private:
    SurrogateModel model_;
    std::vector<AffineMap> maps_;
};

inline std::unique_ptr<ModelHandle> surrogate_handle(SurrogateModel m, std::vector<AffineMap> maps = {})
{
    return std::make_unique<SurrogateHandle>(std::move(m), std::move(maps));
}

/// r2 for score surrogates on continuous targets, label agreement (at 0.5)
/// for logistic surrogates, measured on rows the fit never saw.
inline FidelityScore fidelity(const ModelHandle& surrogate, const FeatureMatrix& X_test,
                              std::span<const double> y_test, FidelityKind kind)
{
    const auto pred = surrogate.predict_batch(X_test);
    FidelityScore f;
    f.kind = kind;
    f.holdout_rows = X_test.rows();
    if (kind == FidelityKind::r2) {
        f.value = r_squared(pred, y_test);
    } else {
        std::size_t agree = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            agree += (pred[i] >= 0.5) == (y_test[i] >= 0.5);
        f.value = static_cast<double>(agree) / static_cast<double>(pred.size());
    }
    return f;
}

} // namespace oproj
