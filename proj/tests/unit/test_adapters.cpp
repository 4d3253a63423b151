#include "test_support.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstdlib>
#include <limits>
#include <random>

using namespace oproj;

namespace {

SubprocessSpec fixture(std::vector<std::string> args, double timeout = 30.0)
{
    SubprocessSpec s;
    s.command = {OPROJ_FIXTURE_MODEL};
    for (auto& a : args)
        s.command.push_back(std::move(a));
    s.timeout_seconds = timeout;
    return s;
}

const FeatureMatrix& two_rows()
{
    static const FeatureMatrix X({{"a", {1, 3}}, {"b", {2, 4}}});
    return X;
}

} // namespace

TEST(InProcess, IdentityModel)
{
    const FeatureMatrix X({{"x", {1, 2, 3}}});
    FunctionModel m(X.names(), [](const FeatureMatrix& M) { return M.column(0).values; });
    EXPECT_EQ(m.predict_batch(X), (TargetVector{1, 2, 3}));
    EXPECT_EQ(m.kind(), ModelKind::in_process);
    EXPECT_TRUE(m.supports_concurrent_queries());
}

TEST(InProcess, ContractViolations)
{
    const FeatureMatrix X({{"x", {1, 2, 3}}});
    FunctionModel shorter(X.names(), [](const FeatureMatrix&) { return TargetVector{1, 2}; });
    EXPECT_THROW(shorter.predict_batch(X), RowCountMismatchError);
    FunctionModel nan(X.names(), [](const FeatureMatrix&) { return TargetVector{1, NAN, 2}; });
    try {
        nan.predict_batch(X);
        FAIL();
    } catch (const NonFinitePredictionError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
    FunctionModel other({"y"}, [](const FeatureMatrix& M) { return TargetVector(M.rows(), 0.0); });
    EXPECT_THROW(other.predict_batch(X), SchemaMismatchError);
}

TEST(Subprocess, EchoSum)
{
    SubprocessModel m(fixture({"sum"}), two_rows().names());
    EXPECT_EQ(m.predict_batch(two_rows()), (TargetVector{3, 7}));
    EXPECT_EQ(m.invocations(), 1u);
    EXPECT_EQ(m.kind(), ModelKind::subprocess);
    EXPECT_FALSE(m.supports_concurrent_queries());
}

TEST(Subprocess, ShortOutputIsRowCountMismatch)
{
    SubprocessModel m(fixture({"short"}), two_rows().names());
    try {
        m.predict_batch(two_rows());
        FAIL();
    } catch (const RowCountMismatchError& e) {
        EXPECT_EQ(e.expected(), 2u);
        EXPECT_EQ(e.actual(), 1u);
    }
}

TEST(Subprocess, MalformedLineCarriesRow)
{
    SubprocessModel m(fixture({"garbage"}), two_rows().names());
    try {
        m.predict_batch(two_rows());
        FAIL();
    } catch (const MalformedOutputError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
}

TEST(Subprocess, NonFiniteLineCarriesRow)
{
    SubprocessModel m(fixture({"nan"}), two_rows().names());
    try {
        m.predict_batch(two_rows());
        FAIL();
    } catch (const NonFinitePredictionError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
}

TEST(Subprocess, NonZeroExit)
{
    SubprocessModel m(fixture({"fail"}), two_rows().names());
    try {
        m.predict_batch(two_rows());
        FAIL();
    } catch (const ModelExitError& e) {
        EXPECT_EQ(e.status(), 3);
        EXPECT_NE(std::string(e.what()).find("fixture failure requested"), std::string::npos);
    }
}

TEST(Subprocess, Timeout)
{
    SubprocessModel m(fixture({"sleep", "5"}, 0.3), two_rows().names());
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_THROW(m.predict_batch(two_rows()), ModelTimeoutError);
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(3));
}

TEST(Subprocess, MissingExecutableNamesCommand)
{
    SubprocessSpec s;
    s.command = {"/nonexistent/oproj-model"};
    SubprocessModel m(s, two_rows().names());
    try {
        m.predict_batch(two_rows());
        FAIL();
    } catch (const ModelLaunchError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/oproj-model"), std::string::npos);
    }
}

TEST(Subprocess, ChunksLargeBatches)
{
    auto spec = fixture({"sum"});
    spec.max_batch_rows = 3;
    const auto X = testkit::random_matrix(10, 2, 4);
    SubprocessModel m(spec, X.names());
    const auto out = m.predict_batch(X);
    EXPECT_EQ(m.invocations(), 4u);
    for (std::size_t i = 0; i < 10; ++i)
        EXPECT_EQ(out[i], X(i, 0) + X(i, 1));
}

TEST(Subprocess, SpecValidation)
{
    SubprocessSpec s;
    EXPECT_THROW(s.validate(), SpecError);
    s.command = {"x"};
    s.timeout_seconds = 0;
    EXPECT_THROW(s.validate(), SpecError);
}

TEST(Subprocess, SplitCommand)
{
    EXPECT_EQ(split_command("model --w 1,2"), (std::vector<std::string>{"model", "--w", "1,2"}));
    EXPECT_EQ(split_command("  'a b' \"c d\" e\\ f "), (std::vector<std::string>{"a b", "c d", "e f"}));
    EXPECT_THROW(split_command("'open"), SpecError);
}

TEST(Subprocess, ParsePredictions)
{
    EXPECT_EQ(parse_predictions("1\n2.5\n-3e2\n", 3), (TargetVector{1, 2.5, -300}));
    EXPECT_EQ(parse_predictions("1\r\n2", 2), (TargetVector{1, 2}));
    EXPECT_THROW(parse_predictions("1\n2\n\n", 2), RowCountMismatchError);
    EXPECT_THROW(parse_predictions("", 1), RowCountMismatchError);
    EXPECT_THROW(parse_predictions("1\ninf\n", 2), NonFinitePredictionError);
}

TEST(Subprocess, WireRoundTripIsExact)
{
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> expo(-300, 300);
    std::normal_distribution<double> normal;
    std::vector<FeatureVector> cols;
    for (int j = 0; j < 4; ++j) {
        std::vector<double> v(200);
        for (auto& x : v)
            x = normal(rng) * std::pow(10.0, expo(rng));
        v[0] = std::numeric_limits<double>::denorm_min();
        v[1] = -0.0;
        v[2] = std::numeric_limits<double>::max();
        cols.emplace_back("c,\"" + std::to_string(j), std::move(v));
    }
    const FeatureMatrix X(std::move(cols));
    std::stringstream ss;
    csv::write_matrix(ss, X);
    const auto back = load_csv(ss, DatasetSchema{});
    ASSERT_EQ(back.features.names(), X.names());
    for (std::size_t j = 0; j < X.cols(); ++j)
        for (std::size_t i = 0; i < X.rows(); ++i)
            EXPECT_EQ(std::bit_cast<std::uint64_t>(back.features(i, j)),
                      std::bit_cast<std::uint64_t>(X(i, j)));
}

TEST(CaptureOutputs, EqualsSecondQuery)
{
    const auto X = testkit::random_matrix(25, 3, 77);
    SubprocessModel m(fixture({"linear", "0.5,-1,2"}), X.names());
    const auto y1 = capture_outputs(m, X);
    const auto y2 = m.predict_batch(X);
    EXPECT_EQ(y1, y2);
    EXPECT_FALSE(check_repeatability(m, X, y1).has_value());
}

TEST(CaptureOutputs, NondeterministicModelFlagged)
{
    const auto X = testkit::random_matrix(25, 2, 7);
    SubprocessModel m(fixture({"jitter"}), X.names());
    const auto y = capture_outputs(m, X);
    const auto warning = check_repeatability(m, X, y);
    ASSERT_TRUE(warning.has_value());
    EXPECT_NE(warning->find("nondeterministic"), std::string::npos);
}

TEST(CaptureOutputs, AuditIssuesKPlusOneInvocations)
{
    const auto X = testkit::random_matrix(60, 5, 3);
    SubprocessModel m(fixture({"linear", "1,2,3,4,5"}), X.names());
    AuditConfig cfg;
    cfg.threads = 4;
    const auto rep = rank_all_captured(m, X, cfg);
    EXPECT_EQ(m.invocations(), 6u);
    EXPECT_EQ(rep.batch_queries, 6u);
    EXPECT_EQ(rep.order().front(), "f4");
}

TEST(CaptureOutputs, AdapterErrorsDoNotCorruptOtherEntries)
{
    // The model breaks whenever it sees a constant first column, i.e. only
    // while f0 is being audited.
    const auto X = testkit::random_matrix(30, 3, 5);
    auto inner = std::make_shared<SubprocessModel>(fixture({"linear", "1,2,3"}), X.names());
    FunctionModel m(X.names(), [inner](const FeatureMatrix& M) {
        const auto& c = M.column(0).values;
        if (std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); }))
            throw MalformedOutputError("bad output", 0);
        return inner->predict_batch(M);
    });
    const auto rep = rank_all_captured(m, X, AuditConfig{});
    EXPECT_TRUE(rep.entry("f0").error.has_value());

    auto good = make_linear_model(X.names(), {1, 2, 3});
    const auto ref = rank_all_captured(*good, X, AuditConfig{});
    for (const char* name : {"f1", "f2"})
        EXPECT_NEAR(rep.entry(name).raw_delta, ref.entry(name).raw_delta, 1e-12);
}
