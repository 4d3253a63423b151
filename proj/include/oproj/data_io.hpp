#pragma once

// Dataset ingestion (CSV + schema), CSV export and z-score standardization.

#include <oproj/csv.hpp>
#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oproj {

enum class ColumnRole { feature, target, ignore };
enum class ColumnKind { numeric, categorical };

struct ColumnSchema
{
    ColumnRole role = ColumnRole::feature;
    ColumnKind kind = ColumnKind::numeric;
};

/// Per-column roles and kinds. Columns not listed are numeric features.
struct DatasetSchema
{
    std::map<std::string, ColumnSchema> columns;

    ColumnSchema lookup(const std::string& name) const
    {
        auto it = columns.find(name);
        return it == columns.end() ? ColumnSchema{} : it->second;
    }

    void set_role(const std::string& name, ColumnRole role) { columns[name].role = role; }
    void set_kind(const std::string& name, ColumnKind kind) { columns[name].kind = kind; }

    std::optional<std::string> target() const
    {
        std::optional<std::string> t;
        for (const auto& [name, c] : columns)
            if (c.role == ColumnRole::target) {
                if (t)
                    throw DataError("schema declares more than one target column ('" + *t +
                                    "', '" + name + "')");
                t = name;
            }
        return t;
    }
};

inline std::string trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return std::string(s);
}

/// Reads "key = value" lines; '#' starts a comment. Later keys win.
inline std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in)
{
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string t = trim(line);
        if (t.empty())
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw SpecError("line " + std::to_string(lineno) + ": expected key = value");
        out.emplace_back(trim(std::string_view(t).substr(0, eq)),
                         trim(std::string_view(t).substr(eq + 1)));
    }
    return out;
}

/// Sidecar schema: one "column = role[:kind]" line per column, role in
/// {feature, target, ignore}, kind in {numeric, categorical}.
inline DatasetSchema parse_schema(std::istream& in)
{
    DatasetSchema schema;
    for (const auto& [name, value] : read_key_values(in)) {
        std::string role = value, kind;
        if (auto colon = value.find(':'); colon != std::string::npos) {
            role = trim(std::string_view(value).substr(0, colon));
            kind = trim(std::string_view(value).substr(colon + 1));
        }
        ColumnSchema c;
        if (role == "feature")
            c.role = ColumnRole::feature;
        else if (role == "target")
            c.role = ColumnRole::target;
        else if (role == "ignore")
            c.role = ColumnRole::ignore;
        else
            throw SpecError("schema: unknown role '" + role + "' for column '" + name + "'");
        if (kind.empty() || kind == "numeric")
            c.kind = ColumnKind::numeric;
        else if (kind == "categorical")
            c.kind = ColumnKind::categorical;
        else
            throw SpecError("schema: unknown kind '" + kind + "' for column '" + name + "'");
        schema.columns[name] = c;
    }
    return schema;
}

struct LoadedDataset
{
    FeatureMatrix features;
    std::optional<TargetVector> target;
    // Original categorical column -> its one-hot column names.
    std::map<std::string, std::vector<std::string>> one_hot_groups;
};

/// Parses CSV text. Numeric cells become doubles; categorical columns
/// expand into "<col>=<level>" indicator columns with levels sorted
/// lexicographically; ignored columns are dropped. Empty cells are errors.
inline LoadedDataset load_csv(std::istream& in, const DatasetSchema& schema,
                              const std::string& source = "<csv>")
{
    std::vector<std::string> header;
    if (!csv::read_record(in, header) || (header.size() == 1 && trim(header[0]).empty()))
        throw DataError(source + ": missing header row");
    for (auto& h : header)
        h = trim(h);
    {
        std::set<std::string> seen;
        for (const auto& h : header)
            if (!seen.insert(h).second)
                throw DataError(source + ": duplicate header name '" + h + "'");
    }
    for (const auto& [name, _] : schema.columns)
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw LookupError(source + ": schema names unknown column '" + name + "'");
    const auto target_name = schema.target();

    const std::size_t width = header.size();
    std::vector<std::vector<std::string>> cells(width);
    std::vector<std::string> rec;
    std::size_t row = 0;
    while (csv::read_record(in, rec)) {
        ++row; // 1-based data row number, header is row 0
        if (rec.size() == 1 && trim(rec[0]).empty())
            continue; // blank line
        if (rec.size() != width)
            throw DataError(source + ": row " + std::to_string(row) + " has " +
                            std::to_string(rec.size()) + " fields, expected " +
                            std::to_string(width));
        for (std::size_t j = 0; j < width; ++j) {
            std::string v = trim(rec[j]);
            if (v.empty())
                throw DataError(source + ": missing value at row " + std::to_string(row) +
                                ", column '" + header[j] + "'");
            cells[j].push_back(std::move(v));
        }
    }

    auto numeric = [&](std::size_t j) {
        std::vector<double> out(cells[j].size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            auto v = csv::parse_double(cells[j][i]);
            if (!v || !std::isfinite(*v))
                throw DataError(source + ": unparseable number '" + cells[j][i] + "' at row " +
                                std::to_string(i + 1) + ", column '" + header[j] + "'");
            out[i] = *v;
        }
        return out;
    };

    LoadedDataset ds;
    std::vector<FeatureVector> cols;
    for (std::size_t j = 0; j < width; ++j) {
        const ColumnSchema cs = schema.lookup(header[j]);
        if (cs.role == ColumnRole::ignore)
            continue;
        if (cs.role == ColumnRole::target) {
            ds.target = numeric(j);
            continue;
        }
        if (cs.kind == ColumnKind::numeric) {
            cols.emplace_back(header[j], numeric(j));
            continue;
        }
        std::set<std::string> levels(cells[j].begin(), cells[j].end());
        auto& group = ds.one_hot_groups[header[j]];
        for (const auto& level : levels) {
            std::vector<double> ind(cells[j].size());
            for (std::size_t i = 0; i < ind.size(); ++i)
                ind[i] = cells[j][i] == level ? 1.0 : 0.0;
            group.push_back(header[j] + "=" + level);
            cols.emplace_back(group.back(), std::move(ind));
        }
    }
    if (target_name && !ds.target)
        throw DataError(source + ": target column missing");
    if (cols.empty())
        throw DataError(source + ": no feature columns");
    ds.features = FeatureMatrix(std::move(cols));
    return ds;
}

inline LoadedDataset load_csv(const std::string& path, const DatasetSchema& schema)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    return load_csv(in, schema, path);
}

/// Writes features (plus an optional trailing target column).
inline void save_csv(std::ostream& out, const FeatureMatrix& X,
                     const std::optional<TargetVector>& y = std::nullopt,
                     const std::string& target_name = "y")
{
    for (std::size_t j = 0; j < X.cols(); ++j)
        out << (j ? "," : "") << csv::quote_field(X.column(j).name);
    if (y)
        out << ',' << csv::quote_field(target_name);
    out << '\n';
    for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < X.cols(); ++j)
            out << (j ? "," : "") << csv::format_double(X(i, j));
        if (y)
            out << ',' << csv::format_double((*y)[i]);
        out << '\n';
    }
}

inline void save_csv(const std::string& path, const FeatureMatrix& X,
                     const std::optional<TargetVector>& y = std::nullopt,
                     const std::string& target_name = "y")
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write '" + path + "'");
    save_csv(out, X, y, target_name);
}

/// z = (x - mean) / sd, population standard deviation.
struct AffineMap
{
    double mean = 0.0;
    double sd = 1.0;

    double forward(double x) const { return (x - mean) / sd; }
    double inverse(double z) const { return mean + sd * z; }
};

struct ColumnMoments
{
    double mean = 0.0;
    double sd = 0.0;
};

inline ColumnMoments moments(std::span<const double> x)
{
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x)
        var += (v - mean) * (v - mean);
    var /= n;
    return {mean, std::sqrt(var)};
}

// A column is constant when its spread is lost in rounding of its magnitude.
inline bool is_constant(const ColumnMoments& m)
{
    return !(m.sd > 1e-13 * std::max(1.0, std::abs(m.mean)));
}

inline FeatureVector apply_forward(const FeatureVector& x, const AffineMap& map)
{
    FeatureVector z{x.name, std::vector<double>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i)
        z.values[i] = map.forward(x.values[i]);
    return z;
}

struct Standardized
{
    FeatureMatrix matrix;
    std::vector<AffineMap> maps;
};

/// Z-scores every column. A constant column is a degenerate-feature error.
inline Standardized standardize(const FeatureMatrix& X)
{
    std::vector<FeatureVector> cols;
    std::vector<AffineMap> maps;
    cols.reserve(X.cols());
    maps.reserve(X.cols());
    for (const auto& c : X.columns()) {
        const ColumnMoments m = moments(c.span());
        if (is_constant(m))
            throw DegenerateFeatureError(c.name, "constant column cannot be standardized");
        maps.push_back({m.mean, m.sd});
        cols.push_back(apply_forward(c, maps.back()));
    }
    return {FeatureMatrix(std::move(cols)), std::move(maps)};
}

} // namespace oproj
