#pragma once

#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>

#include <span>
#include <string>
#include <string_view>

namespace oproj {

enum class MetricKind { mean_squared_error, classification_accuracy };

inline std::string to_string(MetricKind k)
{
    return k == MetricKind::mean_squared_error ? "mse" : "accuracy";
}

struct PerformanceMetric
{
    MetricKind kind = MetricKind::mean_squared_error;
    double threshold = 0.5;

    static PerformanceMetric mse() { return {MetricKind::mean_squared_error, 0.5}; }
    static PerformanceMetric accuracy(double threshold = 0.5)
    {
        return {MetricKind::classification_accuracy, threshold};
    }

    void validate() const
    {
        if (kind == MetricKind::classification_accuracy && !(threshold > 0.0 && threshold < 1.0))
            throw SpecError("accuracy threshold must lie in (0, 1)");
    }
};

inline PerformanceMetric parse_metric(std::string_view s)
{
    if (s == "mse")
        return PerformanceMetric::mse();
    if (s == "accuracy")
        return PerformanceMetric::accuracy();
    throw SpecError("unknown metric '" + std::string(s) + "' (expected mse or accuracy)");
}

/// MSE = mean (pred - y)^2; accuracy = fraction of rows where pred and y
/// fall on the same side of the threshold (>= threshold is class 1).
inline double compute_metric(std::span<const double> pred, std::span<const double> y,
                             const PerformanceMetric& metric)
{
    if (pred.size() != y.size())
        throw DimensionError("metric: prediction length " + std::to_string(pred.size()) +
                             " != target length " + std::to_string(y.size()));
    if (pred.empty())
        throw DimensionError("metric: empty input");
    metric.validate();
    const double n = static_cast<double>(pred.size());
    if (metric.kind == MetricKind::mean_squared_error) {
        double s = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - y[i];
            s += d * d;
        }
        return s / n;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        hits += (pred[i] >= metric.threshold) == (y[i] >= metric.threshold);
    return static_cast<double>(hits) / n;
}

} // namespace oproj
