#include <locale>
#include <sstream>

#include <gtest/gtest.h>

#include "sepcov/io.hpp"

using namespace sepcov;

TEST(Json, KernelRoundTrip) {
    const SeparableKernel k({Kernel1D::squared_exponential(2.5, 1.25, Interval(-1, 2)),
                             Kernel1D::power_exponential(0.5, 3.0, 1.5), Kernel1D::constant(4.0)});
    const Json j = to_json(k);
    EXPECT_EQ(j["factors"][0]["family"], "sqexp");
    EXPECT_EQ(j["factors"][1]["exponent"], 1.5);
    const auto back = kernel_from_json(parse_json(j.dump()));
    EXPECT_EQ(back, k);
    const Point p{{0.3, 0.1, 0.7}}, q{{1.9, 0.4, 0.2}};
    EXPECT_EQ(back(p, q), k(p, q));
}

TEST(Json, KernelDocumentLayout) {
    const auto k = kernel_from_json(parse_json(
        R"({"factors":[{"family":"sqexp","variance":1.0,"length_scale":1.0,"domain":[0,1]},
                       {"family":"sqexp","variance":1.0,"length_scale":1.0}]})"));
    EXPECT_EQ(k.dim(), 2u);
    EXPECT_EQ(k.factor(1).domain().lo, 0.0);
    EXPECT_THROW((void)kernel_from_json(parse_json(R"({"factors":[{"family":"matern","variance":1}]})")),
                 InvalidArgument);
    EXPECT_THROW((void)kernel_from_json(parse_json(R"({"factors":[{"family":"sqexp"}]})")), InvalidArgument);
    EXPECT_THROW((void)kernel_from_json(parse_json(R"({"kernels":[]})")), InvalidArgument);
}

TEST(Json, MalformedReportsLineAndColumn) {
    try {
        (void)parse_json("{\n  \"factors\": [\n    {\"family\": \"sqexp\",,}\n  ]\n}", "kernel.json");
        FAIL() << "no exception";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), 24u);
        EXPECT_NE(std::string(e.what()).find("kernel.json:3:24"), std::string::npos);
    }
}

TEST(Json, BasisRoundTripIsExact) {
    const auto b = nystrom_decompose(Kernel1D::squared_exponential(1.0, 1.7), 20);
    const auto back = basis_from_json(parse_json(to_json(b).dump()));
    EXPECT_EQ(back.eigenvalues(), b.eigenvalues());
    EXPECT_EQ(back.nodes(), b.nodes());
    EXPECT_EQ(back.weights(), b.weights());
    EXPECT_EQ(back.node_values(), b.node_values());
    EXPECT_EQ(back.eigenfunctions(0.37), b.eigenfunctions(0.37));
    const Json j = to_json(b);
    EXPECT_EQ(j["node_eigenvectors"]["rows"], 20);
    EXPECT_EQ(j["node_eigenvectors"]["data"][1], b.node_values()(0, 1));
}

TEST(Format, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(NAN), "nan");
}

namespace {

struct CommaDecimal : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
    char do_thousands_sep() const override { return '.'; }
    std::string do_grouping() const override { return "\3"; }
};

}  // namespace

TEST(Format, IgnoresGlobalLocale) {
    const std::locale saved = std::locale::global(std::locale(std::locale::classic(), new CommaDecimal));
    std::ostringstream probe;
    probe << 1234.5;
    EXPECT_EQ(probe.str(), "1.234,5");

    EXPECT_EQ(format_double(1234.5), "1234.5");
    std::istringstream in("x1,f\n0.25,1.5\n");
    const auto e = read_ensemble_csv(in);
    EXPECT_EQ(e.values(0), 1.5);
    ExperimentReport r;
    r.records.push_back({TruthSource::SeparableKL, DesignKind::LHD, 20000, 2, 1000, 0.5, ""});
    std::ostringstream out;
    write_experiment_csv(out, r);
    EXPECT_EQ(out.str(), "truth,design,n,p,replicate,nrmse\nseparable_kl,lhd,20000,2,1000,0.5\n");
    std::locale::global(saved);
}

TEST(Csv, EnsembleRoundTrip) {
    std::istringstream in("x1,x2,f\n0.1,0.2,3.5\n0.4, 0.9 ,-1e-3\n\n");
    const auto e = read_ensemble_csv(in);
    ASSERT_EQ(e.size(), 2);
    EXPECT_EQ(e.design(1, 1), 0.9);
    EXPECT_EQ(e.values(1), -1e-3);
    std::ostringstream out;
    write_ensemble_csv(out, e);
    EXPECT_EQ(out.str(), "x1,x2,f\n0.1,0.2,3.5\n0.4,0.9,-0.001\n");
}

TEST(Csv, EnsembleErrors) {
    std::istringstream bad_header("a,b,f\n");
    EXPECT_THROW((void)read_ensemble_csv(bad_header), ParseError);
    std::istringstream bad_cell("x1,f\n0.1,abc\n");
    try {
        (void)read_ensemble_csv(bad_cell);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 2u);
    }
    std::istringstream short_row("x1,x2,f\n0.1,0.2\n");
    EXPECT_THROW((void)read_ensemble_csv(short_row), ParseError);
    std::istringstream empty("");
    EXPECT_THROW((void)read_ensemble_csv(empty), ParseError);
}

TEST(Csv, FieldAndPosterior) {
    std::ostringstream f;
    Eigen::MatrixXd v(2, 1);
    v << 1.0, 2.0;
    write_field_csv(f, Eigen::Vector2d(0.0, 0.5), Eigen::VectorXd::Constant(1, 0.25), v);
    EXPECT_EQ(f.str(), "x,y,value\n0,0.25,1\n0.5,0.25,2\n");

    PointSet pts(1, 2);
    pts << 0.5, 0.75;
    Prediction pred{Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, 0.25)};
    std::ostringstream p;
    write_posterior_csv(p, pts, pred);
    EXPECT_EQ(p.str(), "x1,x2,mean,sd\n0.5,0.75,2,0.5\n");
}

TEST(Json, UncorrelationReportFields) {
    UncorrelationReport r;
    r.order_tested = 2;
    r.worst_violation = 12.5;
    r.monomial_a = {2};
    r.monomial_b = {1};
    r.pass = false;
    const Json j = to_json(r);
    for (const char* key : {"order", "worst_violation", "monomial_a", "monomial_b", "pass"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["monomial_a"], Json::array({2}));
}

TEST(Json, ExperimentConfigRoundTrip) {
    const auto c = experiment_config_from_json(parse_json(
        R"({"p": 3, "replicates": 12, "designs": ["lhd", "grid"], "truth_sources": ["product"],
            "master_seed": 7, "length_scale": 1.5})"));
    EXPECT_EQ(c.p, 3u);
    EXPECT_EQ(c.n_runs, 30);
    EXPECT_EQ(c.designs.size(), 2u);
    EXPECT_EQ(c.truth_sources[0], TruthSource::ProductProcess);
    const auto back = experiment_config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_THROW((void)experiment_config_from_json(parse_json(R"({"replicates": 2})")), InvalidArgument);
    EXPECT_THROW((void)experiment_config_from_json(parse_json(R"({"p": "two"})")), InvalidArgument);
}

TEST(Csv, ExperimentTable) {
    ExperimentReport r;
    r.records.push_back({TruthSource::SeparableKL, DesignKind::LHD, 20, 2, 0, 0.125, ""});
    r.records.push_back({TruthSource::SeparableKL, DesignKind::AxisAligned, 20, 2, 0, 0.5, ""});
    std::ostringstream out;
    write_experiment_csv(out, r);
    EXPECT_EQ(out.str(), "truth,design,n,p,replicate,nrmse\nseparable_kl,lhd,20,2,0,0.125\nseparable_kl,axis,20,2,0,0.5\n");
    const Json s = experiment_summary_json(r);
    EXPECT_EQ(s["aggregates"].size(), 2u);
    EXPECT_EQ(s["sign_tests"][0]["lhd_wins"], 1);
}

TEST(Json, RegressionPrior) {
    const auto r = regression_prior_from_json(parse_json(
        R"({"regressors":[{"type":"constant"},{"type":"linear","dim":1},
                          {"type":"interaction","dims":[0,1],"centers":[0.5,0.25]}],
            "mean":[1,0,0], "variance":2.0})"));
    ASSERT_EQ(r.size(), 3u);
    const Eigen::VectorXd h = r.basis(Point{{0.75, 0.5}});
    EXPECT_EQ(h(0), 1.0);
    EXPECT_EQ(h(1), 0.5);
    EXPECT_EQ(h(2), 0.25 * 0.25);
    EXPECT_EQ(r.coef_cov, 2.0 * Eigen::Matrix3d::Identity());
    EXPECT_EQ(r.coef_mean(0), 1.0);
    const auto full = regression_prior_from_json(
        parse_json(R"({"regressors":[{"type":"constant"}],"covariance":[[0.5]]})"));
    EXPECT_EQ(full.coef_cov(0, 0), 0.5);
    EXPECT_EQ(full.coef_mean(0), 0.0);
    EXPECT_THROW((void)regression_prior_from_json(parse_json(R"({"regressors":[{"type":"cubic"}]})")),
                 InvalidArgument);
    EXPECT_THROW((void)regression_prior_from_json(parse_json(R"({"regressors":[{"type":"linear"}]})")),
                 InvalidArgument);
}

TEST(Json, SuiteResult) {
    SuiteResult r{"demo", {{"a", true, 0.5, 1.0, "<="}, {"b", false, NAN, 1.0, "<="}}, 0.25};
    const Json j = to_json(r);
    EXPECT_EQ(j["suite"], "demo");
    EXPECT_FALSE(j["pass"].get<bool>());
    EXPECT_TRUE(j["assertions"][1]["value"].is_null());
    EXPECT_EQ(j["assertions"][0]["relation"], "<=");
}
