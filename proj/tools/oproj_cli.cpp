// oproj: command-line front end.
//
//   oproj audit    --data PATH (--model CMD | --surrogate ridge|logistic) ...
//   oproj synth    --spec PATH --out PATH
//   oproj validate --data PATH (--model CMD | --surrogate ...) --oracle refit-loco
//
// Exit status: 0 success, 1 audit failure, 2 usage error.

#include <oproj/oproj.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct ModelOptions
{
    std::string data;
    std::string schema;
    std::vector<std::string> categorical;
    std::vector<std::string> ignore;
    std::string model;
    std::string surrogate;
    std::string target = "captured";
    std::string metric = "mse";
    double threshold = 0.5;
    std::string transforms = "default";
    std::string replace = "mean";
    bool no_standardize = false;
    std::optional<std::uint64_t> seed;
    double timeout = 60.0;
    std::size_t max_batch_rows = 1'000'000;
    std::size_t threads = 0;
    double lambda = oproj::kDefaultRidgeLambda;
    std::size_t max_iter = 500;
    double step = 0.1;
    bool check_determinism = false;
    bool label_output = false;
};

void add_model_options(CLI::App* cmd, ModelOptions& o)
{
    cmd->add_option("--data", o.data, "Input CSV with a header row")->required();
    cmd->add_option("--schema", o.schema, "Sidecar schema file (column = role[:kind] lines)");
    cmd->add_option("--categorical", o.categorical, "Columns to one-hot encode")->delimiter(',');
    cmd->add_option("--ignore", o.ignore, "Columns to drop")->delimiter(',');
    cmd->add_option("--model", o.model, "Black-box command speaking the CSV stdin/stdout protocol");
    cmd->add_option("--surrogate", o.surrogate, "Fit and audit a surrogate instead")
        ->check(CLI::IsMember({"ridge", "logistic"}));
    cmd->add_option("--target", o.target, "captured | column:NAME");
    cmd->add_option("--metric", o.metric, "mse | accuracy")->check(CLI::IsMember({"mse", "accuracy"}));
    cmd->add_option("--threshold", o.threshold, "Accuracy threshold in (0,1)");
    cmd->add_option("--transforms", o.transforms,
                    "default | none | comma list of log, exp[:CLIP], polyN");
    cmd->add_option("--replace", o.replace, "Audited column replacement: mean | zero | NUMBER");
    cmd->add_flag("--no-standardize", o.no_standardize, "Project raw columns instead of z-scores");
    cmd->add_option("--seed", o.seed, "Random seed (falls back to OPROJ_SEED, then 0)");
    cmd->add_option("--timeout", o.timeout, "Per-invocation model timeout in seconds");
    cmd->add_option("--max-batch-rows", o.max_batch_rows, "Rows per model invocation");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware)");
    cmd->add_option("--lambda", o.lambda, "Ridge regularization strength");
    cmd->add_option("--max-iter", o.max_iter, "Logistic surrogate iteration cap");
    cmd->add_option("--step", o.step, "Logistic surrogate step size");
    cmd->add_flag("--check-determinism", o.check_determinism,
                  "Re-query the model once and warn if outputs move");
    cmd->add_flag("--label-output", o.label_output, "Model emits class labels rather than scores");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag)
{
    if (flag)
        return *flag;
    if (const char* env = std::getenv("OPROJ_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::strlen(env))
                return v;
        } catch (...) {
        }
        throw UsageError(std::string("OPROJ_SEED is not a non-negative integer: '") + env + "'");
    }
    return 0;
}

// Everything an audit run produces before it is written out.
struct AuditRun
{
    oproj::AuditConfig cfg;
    oproj::DependenceReport report;
    std::optional<oproj::SurrogateInfo> surrogate;
    std::vector<std::string> warnings;
    nlohmann::json echo;
    oproj::FeatureMatrix X;
    oproj::TargetVector target; // vector the audit measured against
};

AuditRun run_audit(const ModelOptions& o)
{
    if (o.model.empty() == o.surrogate.empty())
        throw UsageError("exactly one of --model or --surrogate is required");

    std::optional<std::string> target_column;
    if (o.target.rfind("column:", 0) == 0) {
        target_column = o.target.substr(7);
        if (target_column->empty())
            throw UsageError("--target column: needs a column name");
    } else if (o.target != "captured") {
        throw UsageError("--target must be 'captured' or 'column:NAME'");
    }
    if (!o.surrogate.empty() && !target_column)
        throw UsageError("--surrogate needs the recorded black-box outputs via --target column:NAME");

    AuditRun run;
    try {
        run.cfg.metric = oproj::parse_metric(o.metric);
        run.cfg.metric.threshold = o.threshold;
        run.cfg.metric.validate();
        run.cfg.transforms = oproj::parse_transform_set(o.transforms);
        run.cfg.replacement = oproj::parse_replacement(o.replace);
    } catch (const oproj::SpecError& e) {
        throw UsageError(e.what());
    }
    run.cfg.standardize = !o.no_standardize;
    run.cfg.seed = resolve_seed(o.seed);
    run.cfg.threads = o.threads;

    oproj::DatasetSchema schema;
    if (!o.schema.empty()) {
        std::ifstream in(o.schema);
        if (!in)
            throw UsageError("cannot open schema file '" + o.schema + "'");
        try {
            schema = oproj::parse_schema(in);
        } catch (const oproj::SpecError& e) {
            throw UsageError(e.what());
        }
    }
    for (const auto& c : o.categorical)
        schema.set_kind(c, oproj::ColumnKind::categorical);
    for (const auto& c : o.ignore)
        schema.set_role(c, oproj::ColumnRole::ignore);
    if (target_column) {
        for (auto& [name, cs] : schema.columns)
            if (cs.role == oproj::ColumnRole::target && name != *target_column)
                cs.role = oproj::ColumnRole::ignore;
        schema.set_role(*target_column, oproj::ColumnRole::target);
    } else {
        for (auto& [name, cs] : schema.columns)
            if (cs.role == oproj::ColumnRole::target)
                throw UsageError("schema declares target '" + name +
                                 "' but --target is captured; use --target column:" + name);
    }

    auto ds = oproj::load_csv(o.data, schema);
    run.X = ds.features;
    run.cfg.groups = ds.one_hot_groups;

    run.echo = {{"data", fs::path(o.data).filename().string()},
                {"target", o.target},
                {"features", run.X.names()},
                {"rows", run.X.rows()}};

    std::unique_ptr<oproj::ModelHandle> handle;
    if (!o.model.empty()) {
        oproj::SubprocessSpec spec;
        try {
            spec.command = oproj::split_command(o.model);
            spec.timeout_seconds = o.timeout;
            spec.max_batch_rows = o.max_batch_rows;
            spec.validate();
        } catch (const oproj::SpecError& e) {
            throw UsageError(e.what());
        }
        run.echo["model"] = o.model;
        handle = std::make_unique<oproj::SubprocessModel>(
            spec, run.X.names(), o.label_output ? oproj::OutputMode::label : oproj::OutputMode::score);
    } else {
        const auto split = oproj::split_rows(run.X.rows(), run.cfg.seed);
        const auto Xtr = oproj::select_rows(run.X, split.train);
        const auto Xte = oproj::select_rows(run.X, split.test);
        const auto ytr = oproj::select_rows(*ds.target, split.train);
        const auto yte = oproj::select_rows(*ds.target, split.test);
        oproj::SurrogateInfo info;
        info.family = o.surrogate;
        if (o.surrogate == "ridge") {
            auto m = oproj::fit_ridge(Xtr, ytr, o.lambda);
            for (const auto& w : m.warnings)
                run.warnings.push_back(w);
            info.lambda = m.lambda;
            handle = oproj::surrogate_handle(std::move(m));
            info.fidelity = oproj::fidelity(*handle, Xte, yte, oproj::FidelityKind::r2);
        } else {
            const auto st = oproj::standardize(Xtr);
            auto m = oproj::fit_logistic(st.matrix, ytr, {o.max_iter, o.step, 1e-6});
            if (!m.training.converged)
                run.warnings.push_back("logistic surrogate hit the iteration cap (" +
                                       std::to_string(m.training.iterations) +
                                       ") with gradient max-norm " +
                                       std::to_string(m.training.final_gradient_norm));
            info.training = m.training;
            handle = oproj::surrogate_handle(std::move(m), st.maps);
            info.fidelity = oproj::fidelity(*handle, Xte, yte, oproj::FidelityKind::agreement);
        }
        info.fidelity.split_seed = run.cfg.seed;
        info.fidelity.train_rows = Xtr.rows();
        run.surrogate = info;
        run.echo["surrogate"] = o.surrogate;
        // The surrogate stands in for the black box; audit it against its own outputs.
        target_column.reset();
        run.echo["audit_target"] = "captured";
    }

    if (target_column) {
        run.target = *ds.target;
        run.report = oproj::rank_all(*handle, run.X, run.target, run.cfg);
    } else {
        run.report = oproj::rank_all_captured(*handle, run.X, run.cfg, &run.target);
        if (o.check_determinism) {
            if (auto w = oproj::check_repeatability(*handle, run.X, run.target))
                run.warnings.push_back(*w);
            ++run.report.batch_queries;
        }
    }
    return run;
}

std::vector<std::string> parse_formats(const std::vector<std::string>& formats)
{
    std::vector<std::string> out;
    for (const auto& f : formats) {
        if (f != "json" && f != "csv" && f != "svg")
            throw UsageError("unknown --format '" + f + "' (expected json, csv, svg)");
        if (std::find(out.begin(), out.end(), f) == out.end())
            out.push_back(f);
    }
    return out;
}

void print_summary(std::ostream& os, const oproj::DependenceReport& rep)
{
    os << "baseline " << oproj::to_string(rep.metric) << ": " << oproj::csv::format_double(rep.baseline)
       << "  (" << rep.batch_queries << " batch queries)\n";
    for (const auto& e : rep.entries) {
        if (e.error) {
            os << "  " << e.name << ": ERROR " << *e.error << '\n';
            continue;
        }
        char line[256];
        std::snprintf(line, sizeof line, "  %-24s %7.2f  raw=%.6g", e.name.c_str(), e.normalized,
                      e.raw_delta);
        os << line << '\n';
    }
}

int cmd_audit(const ModelOptions& o, const std::string& out_dir, const std::vector<std::string>& fmt)
{
    const auto formats = parse_formats(fmt);
    AuditRun run = run_audit(o);
    std::vector<std::string> fmts = formats;
    run.echo["formats"] = fmts;

    fs::create_directories(out_dir);
    const auto doc = oproj::make_report_document(run.report, run.cfg, run.echo, run.surrogate,
                                                 run.warnings, oproj::utc_timestamp());
    {
        std::ofstream f(fs::path(out_dir) / "report.json");
        f << oproj::dump_report(doc);
        if (!f)
            throw oproj::Error("cannot write report.json in '" + out_dir + "'");
    }
    if (std::find(fmts.begin(), fmts.end(), "csv") != fmts.end()) {
        std::ofstream f(fs::path(out_dir) / "report.csv");
        oproj::write_report_csv(f, run.report);
    }
    if (std::find(fmts.begin(), fmts.end(), "svg") != fmts.end()) {
        std::ofstream f(fs::path(out_dir) / "report.svg");
        oproj::write_report_svg(f, run.report);
    }
    print_summary(std::cout, run.report);
    if (run.surrogate)
        std::cout << "surrogate fidelity ("
                  << (run.surrogate->fidelity.kind == oproj::FidelityKind::r2 ? "r2" : "agreement")
                  << "): " << run.surrogate->fidelity.value << '\n';
    for (const auto& w : doc["warnings"])
        std::cerr << "warning: " << w.get<std::string>() << '\n';
    return kExitOk;
}

int cmd_validate(const ModelOptions& o, const std::string& oracle)
{
    if (oracle != "refit-loco")
        throw UsageError("unknown --oracle '" + oracle + "' (expected refit-loco)");
    AuditRun run = run_audit(o);
    const auto loco = oproj::loco_importances(run.X, run.target, o.lambda);

    std::map<std::string, double> projection, refit;
    for (const auto& e : run.report.entries)
        if (!e.error)
            projection[e.name] = e.raw_delta;
    for (const auto& l : loco)
        refit[l.name] = l.importance;

    std::cout << "feature                  projection        loco-refit\n";
    for (const auto& e : run.report.entries) {
        if (e.error)
            continue;
        char line[256];
        std::snprintf(line, sizeof line, "%-24s %-17.6g %.6g", e.name.c_str(), e.raw_delta,
                      refit[e.name]);
        std::cout << line << '\n';
    }
    if (projection.size() < 2) {
        std::cout << "spearman: undefined (fewer than two audited features)\n";
        return kExitOk;
    }
    std::cout << "spearman: " << oproj::spearman(projection, refit) << '\n';
    return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path, std::optional<std::uint64_t> seed)
{
    std::ifstream in(spec_path);
    if (!in)
        throw UsageError("cannot open spec '" + spec_path + "'");
    oproj::SyntheticSpec spec;
    try {
        spec = oproj::parse_synthetic_spec(in);
        if (seed)
            spec.seed = *seed;
    } catch (const oproj::SpecError& e) {
        throw UsageError(e.what());
    }
    oproj::SyntheticData data;
    try {
        data = oproj::generate_synthetic(spec);
    } catch (const oproj::SpecError& e) {
        throw UsageError(e.what());
    }
    if (auto parent = fs::path(out_path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    oproj::save_csv(out_path, data.X, data.y, "y");

    std::ofstream truth(out_path + ".truth");
    truth << "order = ";
    for (std::size_t i = 0; i < data.importance_order.size(); ++i)
        truth << (i ? "," : "") << data.importance_order[i];
    truth << "\nlinear_only = " << (spec.linear_only() ? "true" : "false") << '\n';
    truth << "coefficients = ";
    for (std::size_t j = 0; j < spec.k(); ++j)
        truth << (j ? "," : "") << oproj::csv::format_double(spec.coefficients[j]);
    truth << "\nseed = " << spec.seed << '\n';
    if (!truth)
        throw oproj::Error("cannot write '" + out_path + ".truth'");
    std::cout << "wrote " << out_path << " (" << data.X.rows() << " rows, " << data.X.cols()
              << " features) and " << out_path << ".truth\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Black-box feature dependence auditing by iterative orthogonal projection"};
    app.require_subcommand(1);

    ModelOptions audit_opts;
    std::string out_dir = "oproj-out";
    std::vector<std::string> formats{"json"};
    auto* audit = app.add_subcommand("audit", "Rank a model's dependence on each input feature");
    add_model_options(audit, audit_opts);
    audit->add_option("--out", out_dir, "Output directory");
    audit->add_option("--format", formats, "Report formats: json,csv,svg")->delimiter(',');

    std::string spec_path, synth_out;
    std::optional<std::uint64_t> synth_seed;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with known importances");
    synth->add_option("--spec", spec_path, "key = value spec file")->required();
    synth->add_option("--out", synth_out, "Output CSV path")->required();
    synth->add_option("--seed", synth_seed, "Override the spec's seed");

    ModelOptions validate_opts;
    std::string oracle = "refit-loco";
    auto* validate = app.add_subcommand("validate", "Compare the projection audit with a LOCO refit oracle");
    add_model_options(validate, validate_opts);
    validate->add_option("--oracle", oracle, "refit-loco");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*audit)
            return cmd_audit(audit_opts, out_dir, formats);
        if (*synth)
            return cmd_synth(spec_path, synth_out, synth_seed);
        if (*validate)
            return cmd_validate(validate_opts, oracle);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
