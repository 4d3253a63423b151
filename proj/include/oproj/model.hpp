#pragma once

// Uniform batch-prediction contract over any black box.

#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace oproj {

enum class ModelKind { in_process, subprocess, surrogate };
enum class OutputMode { score, label };

inline std::string to_string(ModelKind k)
{
    switch (k) {
    case ModelKind::in_process: return "in-process";
    case ModelKind::subprocess: return "subprocess";
    case ModelKind::surrogate: return "surrogate";
    }
    return "unknown";
}

/// Abstract black box. predict_batch() enforces the contract (matching
/// column names, n finite outputs); subclasses implement do_predict().
class ModelHandle
{
public:
    explicit ModelHandle(std::vector<std::string> feature_names)
        : feature_names_(std::move(feature_names))
    {}
    virtual ~ModelHandle() = default;

    ModelHandle(const ModelHandle&) = delete;
    ModelHandle& operator=(const ModelHandle&) = delete;

    virtual ModelKind kind() const noexcept = 0;
    virtual OutputMode output_mode() const noexcept { return OutputMode::score; }
    virtual bool supports_concurrent_queries() const noexcept = 0;

    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    TargetVector predict_batch(const FeatureMatrix& X) const
    {
        if (X.cols() != feature_names_.size())
            throw SchemaMismatchError("model expects " + std::to_string(feature_names_.size()) +
                                      " columns, got " + std::to_string(X.cols()));
        for (std::size_t j = 0; j < X.cols(); ++j)
            if (X.column(j).name != feature_names_[j])
                throw SchemaMismatchError("column " + std::to_string(j) + " is '" +
                                          X.column(j).name + "', model expects '" +
                                          feature_names_[j] + "'");
        TargetVector out = do_predict(X);
        if (out.size() != X.rows())
            throw RowCountMismatchError("model returned " + std::to_string(out.size()) +
                                            " predictions for " + std::to_string(X.rows()) + " rows",
                                        X.rows(), out.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!std::isfinite(out[i]))
                throw NonFinitePredictionError("non-finite prediction at row " + std::to_string(i), i);
        return out;
    }

protected:
    virtual TargetVector do_predict(const FeatureMatrix& X) const = 0;

private:
    std::vector<std::string> feature_names_;
};

/// Wraps a callable as a pure in-process model.
class FunctionModel final : public ModelHandle
{
public:
    using Fn = std::function<TargetVector(const FeatureMatrix&)>;

    FunctionModel(std::vector<std::string> names, Fn fn, bool concurrent = true,
                  OutputMode mode = OutputMode::score)
        : ModelHandle(std::move(names)), fn_(std::move(fn)), concurrent_(concurrent), mode_(mode)
    {}

    ModelKind kind() const noexcept override { return ModelKind::in_process; }
    OutputMode output_mode() const noexcept override { return mode_; }
    bool supports_concurrent_queries() const noexcept override { return concurrent_; }

protected:
    TargetVector do_predict(const FeatureMatrix& X) const override { return fn_(X); }

private:
    Fn fn_;
    bool concurrent_;
    OutputMode mode_;
};

/// Row-wise linear model b + sum_j w_j x_j over the named columns.
inline std::unique_ptr<ModelHandle> make_linear_model(std::vector<std::string> names,
                                                      std::vector<double> weights,
                                                      double intercept = 0.0)
{
    if (names.size() != weights.size())
        throw DimensionError("linear model: names and weights differ in length");
    auto fn = [weights = std::move(weights), intercept](const FeatureMatrix& X) {
        TargetVector y(X.rows(), intercept);
        for (std::size_t j = 0; j < X.cols(); ++j) {
            const auto& col = X.column(j).values;
            for (std::size_t i = 0; i < y.size(); ++i)
                y[i] += weights[j] * col[i];
        }
        return y;
    };
    return std::make_unique<FunctionModel>(std::move(names), std::move(fn));
}

/// Queries the model once to define the audit's target vector.
inline TargetVector capture_outputs(const ModelHandle& h, const FeatureMatrix& X)
{
    return h.predict_batch(X);
}

/// Re-queries the model and reports a warning if any output moved by more
/// than `tol` from the captured vector.
inline std::optional<std::string> check_repeatability(const ModelHandle& h, const FeatureMatrix& X,
                                                      const TargetVector& captured,
                                                      double tol = 1e-12)
{
    const TargetVector again = h.predict_batch(X);
    double worst = 0.0;
    std::size_t where = 0;
    for (std::size_t i = 0; i < again.size(); ++i) {
        const double d = std::abs(again[i] - captured[i]);
        if (d > worst) {
            worst = d;
            where = i;
        }
    }
    if (worst > tol)
        return "model is nondeterministic: repeat query differs by " + std::to_string(worst) +
               " at row " + std::to_string(where);
    return std::nullopt;
}

} // namespace oproj
