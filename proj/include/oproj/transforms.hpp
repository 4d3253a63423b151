#pragma once

// Nonlinear companions of an audited feature. They join the removal subspace
// so that projecting the other features also strips the audited feature's
// log / polynomial / exponential footprint.

#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace oproj {

struct TransformSet
{
    bool enable_log = true;
    std::set<int> poly_degrees{2, 3};
    bool enable_exp = true;
    double exp_clip = 20.0;

    static TransformSet none() { return TransformSet{false, {}, false, 20.0}; }

    std::size_t count() const noexcept
    {
        return static_cast<std::size_t>(enable_log) + poly_degrees.size() +
               static_cast<std::size_t>(enable_exp);
    }

    void validate() const
    {
        for (int d : poly_degrees)
            if (d < 2)
                throw SpecError("polynomial degree must be >= 2, got " + std::to_string(d));
        if (!(exp_clip > 0.0) || !std::isfinite(exp_clip))
            throw SpecError("exp clip must be a positive finite number");
    }

    /// Canonical textual form, accepted back by parse_transform_set.
    std::string to_string() const
    {
        std::vector<std::string> parts;
        if (enable_log)
            parts.push_back("log");
        for (int d : poly_degrees)
            parts.push_back("poly" + std::to_string(d));
        if (enable_exp) {
            std::ostringstream os;
            os.precision(17);
            os << "exp:" << exp_clip;
            parts.push_back(os.str());
        }
        if (parts.empty())
            return "none";
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i)
            out += (i ? "," : "") + parts[i];
        return out;
    }
};

/// Parses "default", "none", or a comma list of log, expN / exp:CLIP, polyN.
inline TransformSet parse_transform_set(std::string_view spec)
{
    if (spec == "default")
        return TransformSet{};
    TransformSet ts = TransformSet::none();
    if (spec == "none" || spec.empty())
        return ts;

    auto parse_number = [&](std::string_view tok, std::string_view text, auto& out) {
        const char* first = text.data();
        const char* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc{} || ptr != last)
            throw SpecError("bad transform token '" + std::string(tok) + "'");
    };

    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t comma = spec.find(',', pos);
        if (comma == std::string_view::npos)
            comma = spec.size();
        std::string_view tok = spec.substr(pos, comma - pos);
        pos = comma + 1;
        if (tok.empty())
            continue;
        if (tok == "log") {
            ts.enable_log = true;
        } else if (tok == "exp") {
            ts.enable_exp = true;
        } else if (tok.starts_with("exp:")) {
            ts.enable_exp = true;
            parse_number(tok, tok.substr(4), ts.exp_clip);
        } else if (tok.starts_with("poly")) {
            int d = 0;
            parse_number(tok, tok.substr(tok.starts_with("poly:") ? 5 : 4), d);
            ts.poly_degrees.insert(d);
        } else {
            throw SpecError("unknown transform '" + std::string(tok) + "'");
        }
    }
    ts.validate();
    return ts;
}

/// Enabled transforms of x in the fixed order [log, poly by ascending
/// degree, exp], each named "<feature>__<transform>".
inline std::vector<FeatureVector> expand_feature(const FeatureVector& x, const TransformSet& ts)
{
    ts.validate();
    const std::size_t n = x.size();
    std::vector<FeatureVector> out;
    out.reserve(ts.count());

    if (ts.enable_log) {
        const double lo = n ? *std::min_element(x.values.begin(), x.values.end()) : 0.0;
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = std::log(x.values[i] - lo + 1.0);
        out.emplace_back(x.name + "__log", std::move(v));
    }

    for (int d : ts.poly_degrees) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            double p = 1.0;
            for (int e = 0; e < d; ++e)
                p *= x.values[i];
            v[i] = p;
        }
        out.emplace_back(x.name + "__poly" + std::to_string(d), std::move(v));
    }

    if (ts.enable_exp) {
        double mean = 0.0;
        for (double v : x.values)
            mean += v;
        mean /= static_cast<double>(n ? n : 1);
        double var = 0.0;
        for (double v : x.values)
            var += (v - mean) * (v - mean);
        var /= static_cast<double>(n ? n : 1);
        const double sd = std::sqrt(var);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            // A constant column standardizes to all zeros.
            const double z = sd > 0.0 ? (x.values[i] - mean) / sd : 0.0;
            v[i] = std::exp(std::clamp(z, -ts.exp_clip, ts.exp_clip));
        }
        out.emplace_back(x.name + "__exp", std::move(v));
    }

    // Overflow is possible for very large polynomial inputs.
    for (const auto& f : out)
        if (!all_finite(f.span()))
            throw DegenerateFeatureError(x.name, "transform '" + f.name + "' overflowed");
    return out;
}

/// [x_current] followed by expand_feature(x_current, ts).
inline std::vector<FeatureVector> build_removal_candidates(const FeatureMatrix& X,
                                                           const std::string& current,
                                                           const TransformSet& ts)
{
    const FeatureVector& x = X.column(current);
    std::vector<FeatureVector> out;
    out.reserve(1 + ts.count());
    out.push_back(x);
    for (auto& f : expand_feature(x, ts))
        out.push_back(std::move(f));
    return out;
}

} // namespace oproj
