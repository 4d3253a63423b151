#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace oproj;

namespace {

LoadedDataset load(const std::string& text, const DatasetSchema& schema = {})
{
    std::istringstream in(text);
    return load_csv(in, schema, "test.csv");
}

} // namespace

TEST(LoadCsv, NumericMatrix)
{
    const auto ds = load("a,b\n1,2\n3,4\n");
    EXPECT_EQ(ds.features.rows(), 2u);
    EXPECT_EQ(ds.features.cols(), 2u);
    EXPECT_EQ(ds.features.column("b").values, (std::vector<double>{2, 4}));
    EXPECT_FALSE(ds.target.has_value());
}

TEST(LoadCsv, OneHotLevelsSortedAndComplete)
{
    DatasetSchema schema;
    schema.set_kind("g", ColumnKind::categorical);
    const auto ds = load("x,g\n1,M\n2,F\n3,M\n4,F\n", schema);
    EXPECT_EQ(ds.features.names(), (std::vector<std::string>{"x", "g=F", "g=M"}));
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_EQ(ds.features.column("g=F")[i] + ds.features.column("g=M")[i], 1.0);
    EXPECT_EQ(ds.one_hot_groups.at("g"), (std::vector<std::string>{"g=F", "g=M"}));
}

TEST(LoadCsv, EmptyCellCitesRowAndColumn)
{
    try {
        load("a,b\n1,2\n3,\n");
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
    }
}

TEST(LoadCsv, Errors)
{
    EXPECT_THROW(load("a,b\n1,x\n3,4\n"), DataError);
    EXPECT_THROW(load("a,a\n1,2\n3,4\n"), DataError);
    EXPECT_THROW(load(""), DataError);
    EXPECT_THROW(load("a,b\n1,2,3\n"), DataError);
    DatasetSchema schema;
    schema.set_role("zz", ColumnRole::target);
    EXPECT_THROW(load("a,b\n1,2\n3,4\n", schema), LookupError);
}

TEST(LoadCsv, RolesAndQuotedFields)
{
    DatasetSchema schema;
    schema.set_role("y", ColumnRole::target);
    schema.set_role("id", ColumnRole::ignore);
    const auto ds = load("id,\"a,1\",y\nr1,1.5,0\nr2,-2,1\n", schema);
    EXPECT_EQ(ds.features.names(), (std::vector<std::string>{"a,1"}));
    ASSERT_TRUE(ds.target.has_value());
    EXPECT_EQ(*ds.target, (std::vector<double>{0, 1}));
}

TEST(LoadCsv, SchemaSidecar)
{
    std::istringstream in("# roles\ny = target\ng = feature:categorical\nid = ignore\n");
    const auto schema = parse_schema(in);
    EXPECT_EQ(schema.target(), "y");
    EXPECT_EQ(schema.lookup("g").kind, ColumnKind::categorical);
    EXPECT_EQ(schema.lookup("id").role, ColumnRole::ignore);
    EXPECT_EQ(schema.lookup("other").role, ColumnRole::feature);

    std::istringstream bad("y = label\n");
    EXPECT_THROW(parse_schema(bad), SpecError);
}

TEST(SaveCsv, RoundTripIsValueIdentical)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto X = testkit::random_matrix(50, 4, seed);
        std::vector<double> y(50);
        for (std::size_t i = 0; i < 50; ++i)
            y[i] = X(i, 0) * 1e-7 + X(i, 3) * 1e9;
        std::stringstream ss;
        save_csv(ss, X, y, "target");
        DatasetSchema schema;
        schema.set_role("target", ColumnRole::target);
        const auto back = load_csv(ss, schema);
        for (std::size_t j = 0; j < 4; ++j)
            EXPECT_EQ(back.features.column(j).values, X.column(j).values);
        EXPECT_EQ(*back.target, y);
    }
}

TEST(Standardize, PopulationConvention)
{
    const auto s = standardize(FeatureMatrix({{"x", {1, 2, 3}}}));
    const auto m = moments(s.matrix.column(0).span());
    EXPECT_NEAR(m.mean, 0.0, 1e-12);
    EXPECT_NEAR(m.sd, 1.0, 1e-12);
    EXPECT_NEAR(s.maps[0].sd, std::sqrt(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(s.matrix.column(0)[0], -1.0 / std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(Standardize, Idempotent)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto once = standardize(testkit::random_matrix(100, 3, seed)).matrix;
        const auto twice = standardize(once).matrix;
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t i = 0; i < 100; ++i)
                EXPECT_NEAR(twice(i, j), once(i, j), 1e-12);
    }
}

TEST(Standardize, ConstantColumnNamed)
{
    try {
        standardize(FeatureMatrix({{"ok", {1, 2, 3}}, {"flat", {5, 5, 5}}}));
        FAIL();
    } catch (const DegenerateFeatureError& e) {
        EXPECT_EQ(e.feature(), "flat");
    }
}

TEST(Synthetic, IrrelevantColumnHasZeroRefitImportance)
{
    SyntheticSpec spec;
    spec.n = 500;
    spec.coefficients = {1.0, 0.0};
    spec.seed = 1;
    const auto d = generate_synthetic(spec);
    const auto loco = loco_importances(d.X, d.y, 0.0);
    EXPECT_NEAR(loco[1].importance, 0.0, 1e-20);
    EXPECT_GT(loco[0].importance, 0.5);
    EXPECT_EQ(d.importance_order, (std::vector<std::string>{"x1", "x2"}));
}

TEST(Synthetic, SeedDeterminism)
{
    SyntheticSpec spec;
    spec.n = 300;
    spec.coefficients = {1, 2, 3};
    spec.noise_sd = 0.5;
    spec.seed = 42;
    const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
    for (std::size_t j = 0; j < 3; ++j)
        EXPECT_EQ(a.X.column(j).values, b.X.column(j).values);
    EXPECT_EQ(a.y, b.y);
    spec.seed = 43;
    EXPECT_NE(generate_synthetic(spec).y, a.y);
}

TEST(Synthetic, CorrelatedDesignProjectionExceedsRefit)
{
    SyntheticSpec spec;
    spec.n = 2000;
    spec.coefficients = {1.0, 0.0};
    spec.noise_sd = 0.1;
    spec.correlation = DenseMatrix(2, 2);
    spec.correlation(0, 0) = spec.correlation(1, 1) = 1.0;
    spec.correlation(0, 1) = spec.correlation(1, 0) = 0.9;
    spec.seed = 8;
    const auto d = generate_synthetic(spec);
    auto model = surrogate_handle(fit_ridge(d.X, d.y));
    const auto y = capture_outputs(*model, d.X);
    const auto rep = rank_all_captured(*model, d.X, AuditConfig{});
    const auto loco = loco_importances(d.X, y);
    EXPECT_GT(rep.entry("x2").raw_delta, loco[1].importance);
    // Sample correlation is close to the requested 0.9.
    const auto z = standardize(d.X).matrix;
    EXPECT_NEAR(dot(z.column(0), z.column(1)) / 2000.0, 0.9, 0.02);
}

TEST(Synthetic, NonPositiveDefiniteCorrelation)
{
    SyntheticSpec spec;
    spec.coefficients = {1.0, 1.0};
    spec.correlation = DenseMatrix(2, 2, 1.0);
    spec.correlation(0, 1) = spec.correlation(1, 0) = 1.5;
    try {
        generate_synthetic(spec);
        FAIL();
    } catch (const SpecError& e) {
        EXPECT_NE(std::string(e.what()).find("Cholesky"), std::string::npos);
    }
}

TEST(Synthetic, ParseSpec)
{
    std::istringstream in("n = 100\ncoefficients = 1, 0.5\nnoise = 0.2\n"
                          "correlation = 1,0.3;0.3,1\nsquared = 0,1\nnames = a,b\nseed = 9\n");
    const auto spec = parse_synthetic_spec(in);
    EXPECT_EQ(spec.n, 100u);
    EXPECT_EQ(spec.coefficients, (std::vector<double>{1, 0.5}));
    EXPECT_EQ(spec.correlation(0, 1), 0.3);
    EXPECT_FALSE(spec.linear_only());
    EXPECT_EQ(spec.feature_names(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(spec.seed, 9u);

    std::istringstream bad("coefficients = 1\nfoo = 2\n");
    EXPECT_THROW(parse_synthetic_spec(bad), SpecError);
    std::istringstream mismatch("coefficients = 1,2\ncorrelation = 1\n");
    EXPECT_THROW(parse_synthetic_spec(mismatch), SpecError);
}

TEST(Dense, CholeskySolve)
{
    DenseMatrix A(3, 3);
    const double v[3][3] = {{4, 2, 0.4}, {2, 5, 1}, {0.4, 1, 3}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            A(i, j) = v[i][j];
    const auto L = cholesky(A);
    ASSERT_TRUE(L.has_value());
    const auto x = cholesky_solve(*L, {1, 2, 3});
    for (int i = 0; i < 3; ++i) {
        double s = 0;
        for (int j = 0; j < 3; ++j)
            s += v[i][j] * x[j];
        EXPECT_NEAR(s, i + 1.0, 1e-13);
    }
    A(0, 1) = 9; // asymmetric
    EXPECT_FALSE(cholesky(A).has_value());
}
