#pragma once

// Leave-one-covariate-out (LOCO) ridge-refit importances and Spearman rank
// correlation, used as an independent cross-check of projection audits.

#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>
#include <oproj/metrics.hpp>
#include <oproj/surrogate.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace oproj {

struct LocoImportance
{
    std::string name;
    double importance = 0.0; // training-MSE increase when the feature is left out
};

/// Refits ridge without each feature in turn. With k == 1 the reduced model
/// is the intercept alone.
inline std::vector<LocoImportance> loco_importances(const FeatureMatrix& X, std::span<const double> y,
                                                    double lambda = kDefaultRidgeLambda)
{
    const auto mse = PerformanceMetric::mse();
    const auto full = fit_ridge(X, y, lambda);
    const double base = compute_metric(full.predict(X), y, mse);

    std::vector<LocoImportance> out;
    for (std::size_t drop = 0; drop < X.cols(); ++drop) {
        double reduced = 0.0;
        if (X.cols() == 1) {
            const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
            for (double v : y)
                reduced += (v - mean) * (v - mean);
            reduced /= static_cast<double>(y.size());
        } else {
            std::vector<FeatureVector> cols;
            for (std::size_t j = 0; j < X.cols(); ++j)
                if (j != drop)
                    cols.push_back(X.column(j));
            const FeatureMatrix Xr(std::move(cols));
            reduced = compute_metric(fit_ridge(Xr, y, lambda).predict(Xr), y, mse);
        }
        out.push_back({X.column(drop).name, reduced - base});
    }
    return out;
}

/// Average ranks (1-based), ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
            ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

/// Pearson correlation of average ranks. Returns 0 when either side is
/// constant.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size())
        throw DimensionError("spearman: length mismatch");
    if (a.size() < 2)
        throw DimensionError("spearman: need at least two values");
    const auto ra = average_ranks(a), rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0)
        return 0.0;
    return sab / std::sqrt(saa * sbb);
}

/// Spearman correlation between two name -> score maps over their shared keys.
inline double spearman(const std::map<std::string, double>& a, const std::map<std::string, double>& b)
{
    std::vector<double> va, vb;
    for (const auto& [name, score] : a) {
        auto it = b.find(name);
        if (it == b.end())
            continue;
        va.push_back(score);
        vb.push_back(it->second);
    }
    return spearman(va, vb);
}

} // namespace oproj
