#pragma once

// Seeded synthetic regression data with known ground-truth importances.
//
//   x ~ N(0, C) via the Cholesky factor of the correlation matrix C
//   y = sum_j beta_j x_j + sum_j q_j x_j^2 + sum_j l_j log(1 + |x_j|) + sigma * eps

#include <oproj/data_io.hpp>
#include <oproj/dense.hpp>
#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace oproj {

struct SyntheticSpec
{
    std::size_t n = 1000;
    std::vector<double> coefficients;
    double noise_sd = 0.0;
    DenseMatrix correlation; // empty means identity
    std::vector<double> squared; // optional, per feature
    std::vector<double> log_terms; // optional, per feature
    std::vector<std::string> names; // optional, defaults to x1..xk
    std::uint64_t seed = 0;

    std::size_t k() const noexcept { return coefficients.size(); }

    bool linear_only() const
    {
        auto zero = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; });
        };
        return zero(squared) && zero(log_terms);
    }

    std::vector<std::string> feature_names() const
    {
        if (!names.empty())
            return names;
        std::vector<std::string> out;
        for (std::size_t j = 0; j < k(); ++j)
            out.push_back("x" + std::to_string(j + 1));
        return out;
    }

    void validate() const
    {
        if (coefficients.empty())
            throw SpecError("synthetic spec: no coefficients");
        if (n < 2)
            throw SpecError("synthetic spec: n must be at least 2");
        if (!(noise_sd >= 0.0))
            throw SpecError("synthetic spec: noise must be non-negative");
        if (!squared.empty() && squared.size() != k())
            throw SpecError("synthetic spec: squared terms must list one value per feature");
        if (!log_terms.empty() && log_terms.size() != k())
            throw SpecError("synthetic spec: log terms must list one value per feature");
        if (!names.empty() && names.size() != k())
            throw SpecError("synthetic spec: names must list one value per feature");
        if (correlation.rows() != 0 && (correlation.rows() != k() || correlation.cols() != k()))
            throw SpecError("synthetic spec: correlation matrix must be " + std::to_string(k()) +
                            "x" + std::to_string(k()));
    }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto v = csv::parse_double(tok);
        if (!v || !std::isfinite(*v))
            throw SpecError("synthetic spec: bad number '" + trim(tok) + "' in " + key);
        out.push_back(*v);
    }
    return out;
}

} // namespace detail

/// key = value spec. Keys: n, coefficients, noise, correlation ("identity"
/// or rows separated by ';'), squared, log, names, seed.
inline SyntheticSpec parse_synthetic_spec(std::istream& in)
{
    SyntheticSpec spec;
    std::string corr_text;
    for (const auto& [key, value] : read_key_values(in)) {
        if (key == "n") {
            auto v = csv::parse_double(value);
            if (!v || *v < 2 || *v != std::floor(*v))
                throw SpecError("synthetic spec: n must be an integer >= 2");
            spec.n = static_cast<std::size_t>(*v);
        } else if (key == "coefficients") {
            spec.coefficients = detail::parse_list(key, value);
        } else if (key == "noise") {
            auto v = csv::parse_double(value);
            if (!v || *v < 0)
                throw SpecError("synthetic spec: noise must be a non-negative number");
            spec.noise_sd = *v;
        } else if (key == "correlation") {
            corr_text = value;
        } else if (key == "squared") {
            spec.squared = detail::parse_list(key, value);
        } else if (key == "log") {
            spec.log_terms = detail::parse_list(key, value);
        } else if (key == "names") {
            std::stringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ','))
                spec.names.push_back(trim(tok));
        } else if (key == "seed") {
            try {
                std::size_t used = 0;
                spec.seed = std::stoull(value, &used);
                if (used != value.size())
                    throw SpecError("");
            } catch (...) {
                throw SpecError("synthetic spec: seed must be a non-negative integer");
            }
        } else {
            throw SpecError("synthetic spec: unknown key '" + key + "'");
        }
    }
    if (!corr_text.empty() && corr_text != "identity") {
        std::vector<std::vector<double>> rows;
        std::stringstream ss(corr_text);
        std::string row;
        while (std::getline(ss, row, ';'))
            rows.push_back(detail::parse_list("correlation", row));
        DenseMatrix C(rows.size(), rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size())
                throw SpecError("synthetic spec: correlation matrix is not square");
            for (std::size_t j = 0; j < rows.size(); ++j)
                C(i, j) = rows[i][j];
        }
        spec.correlation = std::move(C);
    }
    spec.validate();
    return spec;
}

struct SyntheticData
{
    FeatureMatrix X;
    TargetVector y;
    std::vector<std::string> importance_order; // descending |beta|, ties by name
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    const std::size_t k = spec.k();
    const DenseMatrix C = spec.correlation.rows() ? spec.correlation : DenseMatrix::identity(k);
    auto L = cholesky(C);
    if (!L)
        throw SpecError("synthetic spec: correlation matrix is not symmetric positive definite "
                        "(Cholesky factorization failed)");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto names = spec.feature_names();
    std::vector<std::vector<double>> cols(k, std::vector<double>(spec.n));
    std::vector<double> z(k);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (auto& v : z)
            v = normal(rng);
        for (std::size_t a = 0; a < k; ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b <= a; ++b)
                s += (*L)(a, b) * z[b];
            cols[a][i] = s;
        }
    }

    TargetVector y(spec.n, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double x = cols[j][i];
            s += spec.coefficients[j] * x;
            if (!spec.squared.empty())
                s += spec.squared[j] * x * x;
            if (!spec.log_terms.empty())
                s += spec.log_terms[j] * std::log1p(std::abs(x));
        }
        y[i] = s;
    }
    // Noise drawn after the features so the design does not depend on sigma.
    if (spec.noise_sd > 0.0)
        for (auto& v : y)
            v += spec.noise_sd * normal(rng);

    std::vector<FeatureVector> fv;
    for (std::size_t j = 0; j < k; ++j)
        fv.emplace_back(names[j], std::move(cols[j]));

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    auto weight = [&](std::size_t j) {
        double w = std::abs(spec.coefficients[j]);
        if (!spec.squared.empty())
            w += std::abs(spec.squared[j]);
        if (!spec.log_terms.empty())
            w += std::abs(spec.log_terms[j]);
        return w;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (weight(a) != weight(b))
            return weight(a) > weight(b);
        return names[a] < names[b];
    });
    SyntheticData out{FeatureMatrix(std::move(fv)), std::move(y), {}};
    for (std::size_t j : order)
        out.importance_order.push_back(names[j]);
    return out;
}

} // namespace oproj
