#pragma once

// Report serialization: report.json (machine readable), report.csv and a
// static horizontal bar chart (report.svg) of normalized scores.

#include <oproj/csv.hpp>
#include <oproj/ranking.hpp>
#include <oproj/surrogate.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace oproj {

// Bump on any change to the report.json layout.
inline constexpr int kReportFormatVersion = 1;

struct SurrogateInfo
{
    std::string family; // "ridge" or "logistic"
    FidelityScore fidelity;
    std::optional<double> lambda;
    std::optional<LogisticTraining> training;
};

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json to_json(const DependenceReport& rep)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : rep.entries) {
        nlohmann::json j{{"name", e.name},
                         {"raw_delta", e.raw_delta},
                         {"normalized", e.normalized},
                         {"performance", e.performance},
                         {"dropped_count", e.dropped_count}};
        if (e.error) {
            j["error"] = *e.error;
            j.erase("raw_delta");
            j.erase("normalized");
            j.erase("performance");
        }
        entries.push_back(std::move(j));
    }
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : rep.groups)
        groups.push_back({{"name", g.name},
                          {"members", g.members},
                          {"raw_delta", g.raw_delta},
                          {"normalized", g.normalized}});
    return {{"metric", to_string(rep.metric)},
            {"baseline", rep.baseline},
            {"batch_queries", rep.batch_queries},
            {"entries", std::move(entries)},
            {"groups", std::move(groups)}};
}

inline nlohmann::json to_json(const SurrogateInfo& s)
{
    nlohmann::json j{{"family", s.family},
                     {"fidelity",
                      {{"kind", s.fidelity.kind == FidelityKind::r2 ? "r2" : "agreement"},
                       {"value", s.fidelity.value},
                       {"split_seed", s.fidelity.split_seed},
                       {"train_rows", s.fidelity.train_rows},
                       {"holdout_rows", s.fidelity.holdout_rows}}}};
    if (s.lambda)
        j["lambda"] = *s.lambda;
    if (s.training)
        j["training"] = {{"iterations", s.training->iterations},
                         {"final_gradient_norm", s.training->final_gradient_norm},
                         {"converged", s.training->converged}};
    return j;
}

/// Echo of the settings that shaped an audit.
inline nlohmann::json to_json(const AuditConfig& cfg)
{
    return {{"metric", to_string(cfg.metric.kind)},
            {"threshold", cfg.metric.threshold},
            {"transforms", cfg.transforms.to_string()},
            {"replacement", cfg.replacement.to_string()},
            {"standardize", cfg.standardize},
            {"seed", cfg.seed},
            {"drop_tol", cfg.drop_tol}};
}

/// Full report.json document. `extra_config` is merged into the config echo.
inline nlohmann::json make_report_document(const DependenceReport& rep, const AuditConfig& cfg,
                                           const nlohmann::json& extra_config,
                                           const std::optional<SurrogateInfo>& surrogate,
                                           std::vector<std::string> warnings,
                                           const std::string& timestamp)
{
    nlohmann::json config = to_json(cfg);
    if (extra_config.is_object())
        config.update(extra_config);
    for (const auto& w : rep.warnings)
        warnings.push_back(w);
    nlohmann::json doc{{"format_version", kReportFormatVersion},
                       {"timestamp", timestamp},
                       {"config", std::move(config)},
                       {"report", to_json(rep)},
                       {"warnings", std::move(warnings)}};
    if (surrogate)
        doc["surrogate"] = to_json(*surrogate);
    return doc;
}

inline std::string dump_report(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

inline void write_report_csv(std::ostream& out, const DependenceReport& rep)
{
    out << "name,raw_delta,normalized,dropped_count,error\n";
    for (const auto& e : rep.entries) {
        out << csv::quote_field(e.name) << ',';
        if (e.error)
            out << ",," << e.dropped_count << ',' << csv::quote_field(*e.error) << '\n';
        else
            out << csv::format_double(e.raw_delta) << ',' << csv::format_double(e.normalized) << ','
                << e.dropped_count << ",\n";
    }
}

inline std::string xml_escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

// One decimal, without a trailing ".0" (100.0 -> "100").
inline std::string score_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    std::string s = buf;
    if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0)
        s.resize(s.size() - 2);
    return s;
}

/// Horizontal bar chart, one bar per non-errored entry, longest first.
inline void write_report_svg(std::ostream& out, const DependenceReport& rep,
                             const std::string& title = "Feature dependence (normalized, max = 100)")
{
    std::vector<const DependenceEntry*> bars;
    for (const auto& e : rep.entries)
        if (!e.error)
            bars.push_back(&e);

    constexpr int label_w = 200, plot_w = 400, value_w = 60, bar_h = 20, gap = 6, top = 40;
    const int width = label_w + plot_w + value_w + 20;
    const int height = top + static_cast<int>(bars.size()) * (bar_h + gap) + 20;

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "  <style>text{font-family:sans-serif;font-size:12px}.title{font-size:14px;font-weight:bold}"
           ".bar{fill:#4472c4}</style>\n";
    out << "  <text class=\"title\" x=\"10\" y=\"22\">" << xml_escape(title) << "</text>\n";
    int y = top;
    for (const auto* e : bars) {
        const double len = plot_w * std::clamp(e->normalized, 0.0, 100.0) / 100.0;
        char w[32];
        std::snprintf(w, sizeof w, "%.2f", len);
        out << "  <g>\n";
        out << "    <text x=\"" << label_w - 8 << "\" y=\"" << y + bar_h - 6
            << "\" text-anchor=\"end\">" << xml_escape(e->name) << "</text>\n";
        out << "    <rect class=\"bar\" x=\"" << label_w << "\" y=\"" << y << "\" width=\"" << w
            << "\" height=\"" << bar_h << "\"/>\n";
        out << "    <text x=\"" << label_w + static_cast<int>(len) + 6 << "\" y=\"" << y + bar_h - 6
            << "\">" << score_label(e->normalized) << "</text>\n";
        out << "  </g>\n";
        y += bar_h + gap;
    }
    out << "</svg>\n";
}

} // namespace oproj
