#pragma once

// Feature-dependence audit of a black-box model.
//
// For every feature c the other columns are projected onto the orthogonal
// complement of span{x_c, transforms of x_c}; x_c itself is replaced by a
// constant so the model still receives k columns in their original order.
// The model is queried once on that matrix and the dependence on c is the
// absolute change in the performance metric relative to the baseline.

#include <oproj/data_io.hpp>
#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>
#include <oproj/metrics.hpp>
#include <oproj/model.hpp>
#include <oproj/transforms.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace oproj {

enum class ReplacementPolicy { column_mean, zero, constant };

struct Replacement
{
    ReplacementPolicy policy = ReplacementPolicy::column_mean;
    double value = 0.0; // used by ReplacementPolicy::constant

    std::string to_string() const
    {
        switch (policy) {
        case ReplacementPolicy::column_mean: return "mean";
        case ReplacementPolicy::zero: return "zero";
        case ReplacementPolicy::constant: return csv::format_double(value);
        }
        return "mean";
    }
};

inline Replacement parse_replacement(std::string_view s)
{
    if (s == "mean")
        return {};
    if (s == "zero")
        return {ReplacementPolicy::zero, 0.0};
    if (auto v = csv::parse_double(s); v && std::isfinite(*v))
        return {ReplacementPolicy::constant, *v};
    throw SpecError("replacement must be 'mean', 'zero' or a number, got '" + std::string(s) + "'");
}

struct AuditConfig
{
    PerformanceMetric metric;
    TransformSet transforms;
    Replacement replacement;
    bool standardize = true;
    std::uint64_t seed = 0;
    double drop_tol = kDefaultDropTol;
    // Worker threads for per-feature audits; 0 picks the hardware count.
    std::size_t threads = 0;
    // One-hot group name -> member columns; reported as max over levels.
    std::map<std::string, std::vector<std::string>> groups;
};

struct DependenceEntry
{
    std::string name;
    double raw_delta = 0.0;
    double normalized = 0.0;
    double performance = 0.0; // b_new
    std::size_t dropped_count = 0;
    std::optional<std::string> error;
};

struct GroupEntry
{
    std::string name;
    std::vector<std::string> members;
    double raw_delta = 0.0;
    double normalized = 0.0;
};

struct DependenceReport
{
    MetricKind metric = MetricKind::mean_squared_error;
    double baseline = 0.0;
    std::vector<DependenceEntry> entries;
    std::vector<GroupEntry> groups;
    std::size_t batch_queries = 0;
    std::vector<std::string> warnings;

    const DependenceEntry& entry(const std::string& name) const
    {
        for (const auto& e : entries)
            if (e.name == name)
                return e;
        throw LookupError("no report entry for '" + name + "'");
    }

    std::vector<std::string> order() const
    {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (!e.error)
                out.push_back(e.name);
        return out;
    }
};

/// 100 * raw / max(raw); all zeros stay zeros.
inline std::vector<double> normalize_scores(const std::vector<double>& raw)
{
    double mx = 0.0;
    for (double r : raw)
        mx = std::max(mx, r);
    std::vector<double> out(raw.size(), 0.0);
    if (mx > 0.0)
        for (std::size_t i = 0; i < raw.size(); ++i)
            out[i] = raw[i] == mx ? 100.0 : 100.0 * raw[i] / mx;
    return out;
}

/// metric(model(X), y): one batch query.
inline double baseline_performance(const ModelHandle& model, const FeatureMatrix& X,
                                   std::span<const double> y, const PerformanceMetric& metric)
{
    const auto pred = model.predict_batch(X);
    return compute_metric(pred, y, metric);
}

/// Standardized (or raw) view of X shared by all per-feature audits.
class AuditContext
{
public:
    AuditContext(const FeatureMatrix& X, const AuditConfig& cfg) : cfg_(cfg)
    {
        cfg.transforms.validate();
        cfg.metric.validate();
        std::vector<FeatureVector> cols;
        for (const auto& c : X.columns()) {
            const ColumnMoments m = moments(c.span());
            means_.push_back(m.mean);
            const bool constant = is_constant(m);
            constant_.push_back(constant);
            if (!cfg.standardize) {
                maps_.push_back({0.0, 1.0});
                cols.push_back(c);
            } else if (constant) {
                // Zero in standardized space; maps back to the constant.
                maps_.push_back({m.mean, 0.0});
                cols.emplace_back(c.name, std::vector<double>(c.size(), 0.0));
            } else {
                maps_.push_back({m.mean, m.sd});
                cols.push_back(apply_forward(c, maps_.back()));
            }
        }
        space_ = FeatureMatrix(std::move(cols));
    }

    const FeatureMatrix& space() const noexcept { return space_; }
    const AuditConfig& config() const noexcept { return cfg_; }
    bool is_constant_column(std::size_t j) const { return constant_.at(j); }

    double replacement_value(std::size_t j) const
    {
        switch (cfg_.replacement.policy) {
        case ReplacementPolicy::column_mean: return means_.at(j);
        case ReplacementPolicy::zero: return 0.0;
        case ReplacementPolicy::constant: return cfg_.replacement.value;
        }
        return means_.at(j);
    }

    struct Query
    {
        FeatureMatrix matrix;
        std::size_t dropped_count = 0;
    };

    /// The n x k query matrix with `current` removed from every other column.
    Query build_query(const std::string& current) const
    {
        const std::size_t cur = space_.index_of(current);
        if (constant_[cur])
            throw DegenerateFeatureError(current, "constant feature carries no direction to remove");

        const auto candidates = build_removal_candidates(space_, current, cfg_.transforms);
        FeatureMatrix reduced;
        std::size_t dropped = 0;
        if (candidates.size() == 1) {
            reduced = transform_against_feature(space_, current);
        } else {
            const auto basis = orthonormalize(candidates, cfg_.drop_tol);
            dropped = basis.dropped_count;
            reduced = transform_against_feature(space_, current, basis);
        }

        std::vector<FeatureVector> cols;
        cols.reserve(space_.cols());
        std::size_t r = 0;
        for (std::size_t j = 0; j < space_.cols(); ++j) {
            if (j == cur) {
                cols.emplace_back(space_.column(j).name,
                                  std::vector<double>(space_.rows(), replacement_value(j)));
                continue;
            }
            const FeatureVector& z = reduced.column(r++);
            FeatureVector x{z.name, std::vector<double>(z.size())};
            for (std::size_t i = 0; i < z.size(); ++i)
                x.values[i] = maps_[j].inverse(z.values[i]);
            cols.push_back(std::move(x));
        }
        return {FeatureMatrix(std::move(cols)), dropped};
    }

private:
    AuditConfig cfg_;
    FeatureMatrix space_;
    std::vector<AffineMap> maps_;
    std::vector<double> means_;
    std::vector<bool> constant_;
};

struct FeatureAudit
{
    double raw_delta = 0.0;
    double performance = 0.0;
    std::size_t dropped_count = 0;
};

/// Audits one feature against a precomputed context: one batch query.
inline FeatureAudit audit_feature(const ModelHandle& model, const AuditContext& ctx,
                                  std::span<const double> y, const std::string& current,
                                  double baseline)
{
    auto q = ctx.build_query(current);
    const auto pred = model.predict_batch(q.matrix);
    const double b_new = compute_metric(pred, y, ctx.config().metric);
    return {std::abs(baseline - b_new), b_new, q.dropped_count};
}

inline FeatureAudit audit_feature(const ModelHandle& model, const FeatureMatrix& X,
                                  std::span<const double> y, const std::string& current,
                                  const AuditConfig& cfg, double baseline)
{
    const AuditContext ctx(X, cfg);
    return audit_feature(model, ctx, y, current, baseline);
}

namespace detail {

// Adds one to the query counter for every predict_batch the engine issues
// and serializes queries when the model cannot take them concurrently.
class QueryGate
{
public:
    explicit QueryGate(const ModelHandle& m) : model_(m) {}

    TargetVector predict(const FeatureMatrix& X) const
    {
        ++count_;
        if (model_.supports_concurrent_queries())
            return model_.predict_batch(X);
        std::lock_guard lock(mutex_);
        return model_.predict_batch(X);
    }

    std::size_t count() const noexcept { return count_.load(); }

private:
    const ModelHandle& model_;
    mutable std::atomic<std::size_t> count_{0};
    mutable std::mutex mutex_;
};

inline void finalize_report(DependenceReport& rep, const AuditConfig& cfg)
{
    std::vector<DependenceEntry*> ok;
    for (auto& e : rep.entries)
        if (!e.error)
            ok.push_back(&e);
    std::vector<double> raw;
    for (auto* e : ok)
        raw.push_back(e->raw_delta);
    const auto norm = normalize_scores(raw);
    for (std::size_t i = 0; i < ok.size(); ++i)
        ok[i]->normalized = norm[i];
    double mx = 0.0;
    for (double r : raw)
        mx = std::max(mx, r);

    std::stable_sort(rep.entries.begin(), rep.entries.end(),
                     [](const DependenceEntry& a, const DependenceEntry& b) {
                         if (a.error.has_value() != b.error.has_value())
                             return !a.error.has_value();
                         if (!a.error && a.raw_delta != b.raw_delta)
                             return a.raw_delta > b.raw_delta;
                         return a.name < b.name;
                     });

    for (const auto& [group, members] : cfg.groups) {
        GroupEntry g{group, members, 0.0, 0.0};
        bool any = false;
        for (const auto& m : members)
            for (const auto& e : rep.entries)
                if (e.name == m && !e.error) {
                    g.raw_delta = any ? std::max(g.raw_delta, e.raw_delta) : e.raw_delta;
                    any = true;
                }
        if (!any)
            continue;
        g.normalized = mx > 0.0 ? (g.raw_delta == mx ? 100.0 : 100.0 * g.raw_delta / mx) : 0.0;
        rep.groups.push_back(std::move(g));
    }
}

} // namespace detail

/// Audits every column of X against the target y.
///
/// When `baseline_predictions` is given (the caller already holds model(X),
/// e.g. a captured target) the baseline costs no query; otherwise the model
/// is queried once for it. Either way a full run issues k + 1 batch queries
/// counting the capture.
inline DependenceReport rank_all(const ModelHandle& model, const FeatureMatrix& X,
                                 std::span<const double> y, const AuditConfig& cfg,
                                 const TargetVector* baseline_predictions = nullptr,
                                 std::size_t prior_queries = 0)
{
    if (y.size() != X.rows())
        throw DimensionError("target length " + std::to_string(y.size()) +
                             " does not match sample count " + std::to_string(X.rows()));
    const AuditContext ctx(X, cfg);
    detail::QueryGate gate(model);

    DependenceReport rep;
    rep.metric = cfg.metric.kind;
    rep.baseline = baseline_predictions ? compute_metric(*baseline_predictions, y, cfg.metric)
                                        : compute_metric(gate.predict(X), y, cfg.metric);

    const std::size_t k = X.cols();
    rep.entries.resize(k);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < k; j = next++) {
            DependenceEntry& e = rep.entries[j];
            e.name = X.column(j).name;
            try {
                auto q = ctx.build_query(e.name);
                e.dropped_count = q.dropped_count;
                const auto pred = gate.predict(q.matrix);
                e.performance = compute_metric(pred, y, cfg.metric);
                e.raw_delta = std::abs(rep.baseline - e.performance);
            } catch (const std::exception& ex) {
                const std::string prefix = "feature '" + e.name + "': ";
                const std::string what = ex.what();
                e.error = what.rfind(prefix, 0) == 0 ? what : prefix + what;
            }
        }
    };

    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, k);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    rep.batch_queries = prior_queries + gate.count();
    if (std::all_of(rep.entries.begin(), rep.entries.end(), [](const auto& e) { return e.error; })) {
        std::string msg = "every feature audit failed";
        for (const auto& e : rep.entries)
            msg += "\n  " + *e.error;
        throw AuditFailedError(msg);
    }
    for (const auto& e : rep.entries)
        if (e.error)
            rep.warnings.push_back(*e.error);
    detail::finalize_report(rep, cfg);
    return rep;
}

/// Full audit with the target defined as the model's own output on X
/// (captured once, never re-queried for the baseline).
inline DependenceReport rank_all_captured(const ModelHandle& model, const FeatureMatrix& X,
                                          const AuditConfig& cfg, TargetVector* captured_out = nullptr)
{
    const TargetVector y = capture_outputs(model, X);
    auto rep = rank_all(model, X, y, cfg, &y, 1);
    if (captured_out)
        *captured_out = y;
    return rep;
}

} // namespace oproj
