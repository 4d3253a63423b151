#pragma once

// Minimal RFC 4180 style CSV reading/writing plus exact decimal formatting.

#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>

#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace oproj::csv {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{})
        throw DataError("cannot format number");
    return std::string(buf, ptr);
}

/// Parses a full string as a double; surrounding spaces are allowed.
inline std::optional<double> parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.empty())
        return std::nullopt;
    if (s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

inline std::string quote_field(std::string_view f)
{
    if (f.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(f);
    std::string out = "\"";
    for (char c : f) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Reads one logical record. Returns false at end of input.
inline bool read_record(std::istream& in, std::vector<std::string>& fields)
{
    fields.clear();
    std::string line;
    if (!std::getline(in, line))
        return false;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0;; ++i) {
        if (i == line.size()) {
            if (quoted) {
                // Quoted field spans a newline.
                std::string next;
                if (!std::getline(in, next))
                    throw DataError("unterminated quoted field");
                field += '\n';
                line = std::move(next);
                i = static_cast<std::size_t>(-1);
                continue;
            }
            break;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // CRLF line ending.
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return true;
}

/// Header of column names followed by one row per sample.
inline void write_matrix(std::ostream& out, const FeatureMatrix& X)
{
    for (std::size_t j = 0; j < X.cols(); ++j)
        out << (j ? "," : "") << quote_field(X.column(j).name);
    out << '\n';
    for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < X.cols(); ++j)
            out << (j ? "," : "") << format_double(X(i, j));
        out << '\n';
    }
}

} // namespace oproj::csv
