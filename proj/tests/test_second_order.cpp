#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "sepcov/errors.hpp"
#include "sepcov/second_order.hpp"

using namespace sepcov;

namespace {

Eigen::VectorXd gaussian(std::uint64_t seed, int n) {
    Rng rng = make_stream(seed);
    std::normal_distribution<double> n01;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = n01(rng);
    return v;
}

std::shared_ptr<const ProductBasis> sqexp_product(int n) {
    const auto k = Kernel1D::squared_exponential(1.0, 1.0);
    return std::make_shared<const ProductBasis>(nystrom_decompose(k, 40), nystrom_decompose(k, 40), n);
}

std::shared_ptr<const ProductBasis> constant_product() {
    return std::make_shared<const ProductBasis>(nystrom_decompose(Kernel1D::constant(1.0), 8),
                                                nystrom_decompose(Kernel1D::constant(1.0), 8), 1);
}

}  // namespace

TEST(SampleFamily, Validation) {
    EXPECT_THROW(SampleFamily({"a"}, Eigen::MatrixXd::Zero(1, 1)), SampleSizeError);
    EXPECT_THROW(SampleFamily({"a", "b"}, Eigen::MatrixXd::Zero(5, 1)), ShapeError);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 1);
    bad(1, 0) = NAN;
    EXPECT_THROW(SampleFamily({"a"}, bad), InvalidArgument);
}

TEST(MonomialCount, SmallCases) {
    // k = 1: every X_i against every Y_j.
    EXPECT_EQ(mixed_monomial_count(3, 2, 1), 6.0);
    // One quantity each: a, b in 1..k.
    EXPECT_EQ(mixed_monomial_count(1, 1, 4), 16.0);
    // Two X quantities, degrees 1..2: 2 + 3 = 5 monomials; one Y: 2.
    EXPECT_EQ(mixed_monomial_count(2, 1, 2), 10.0);
}

TEST(Uncorrelated, IndependentGaussiansPass) {
    const int n = 100000;
    Eigen::MatrixXd x(n, 2);
    x.col(0) = gaussian(1, n);
    x.col(1) = gaussian(2, n);
    const auto y = gaussian(3, n);
    const auto r = check_uncorrelated(SampleFamily({"x1", "x2"}, x), SampleFamily::single("y", y), 4);
    EXPECT_TRUE(r.pass) << r.worst_violation;
    EXPECT_EQ(r.order_tested, 4);
    EXPECT_EQ(r.pass_by_order.size(), 4u);
    EXPECT_EQ(static_cast<double>(r.monomials.size()), mixed_monomial_count(2, 1, 4));
}

TEST(Uncorrelated, SquareMinusOneFailsAtSecondOrder) {
    const int n = 100000;
    const auto z = gaussian(7, n);
    const Eigen::VectorXd y = z.array().square() - 1.0;
    const auto r = check_uncorrelated(SampleFamily::single("z", z), SampleFamily::single("y", y), 2);
    ASSERT_EQ(r.pass_by_order.size(), 2u);
    EXPECT_TRUE(r.pass_by_order[0]);
    EXPECT_FALSE(r.pass_by_order[1]);
    EXPECT_FALSE(r.pass);
    const auto* m = r.find({2}, {1});
    ASSERT_NE(m, nullptr);
    EXPECT_NEAR(m->violation, 2.0, 0.2);
    EXPECT_GT(m->standardized, 5.0);
    EXPECT_EQ(m->order(), 2);
}

TEST(Uncorrelated, IdenticalFamiliesFail) {
    const auto z = gaussian(9, 20000);
    const auto r = check_uncorrelated(SampleFamily::single("x", z), SampleFamily::single("y", z), 2);
    EXPECT_FALSE(r.pass);
    const auto* m = r.find({1}, {1});
    ASSERT_NE(m, nullptr);
    EXPECT_GT(m->standardized, 5.0);
    EXPECT_NEAR(m->violation, 1.0, 0.05);
}

TEST(Uncorrelated, JackknifeErrorMatchesClosedForm) {
    // For independent standard Gaussians, SE of mean(XY) - mean(X)mean(Y) is about 1/sqrt(n).
    const int n = 40000;
    const auto x = gaussian(21, n);
    const auto y = gaussian(22, n);
    const auto r = check_uncorrelated(SampleFamily::single("x", x), SampleFamily::single("y", y), 1);
    ASSERT_EQ(r.monomials.size(), 1u);
    EXPECT_NEAR(r.monomials[0].standard_error * std::sqrt(static_cast<double>(n)), 1.0, 0.05);
    const double cov = (x.array() * y.array()).mean() - x.mean() * y.mean();
    EXPECT_NEAR(r.monomials[0].violation, cov, 1e-14);
}

TEST(Uncorrelated, ErrorsAndBudget) {
    const auto x = gaussian(1, 100);
    const auto y = gaussian(2, 99);
    EXPECT_THROW((void)check_uncorrelated(SampleFamily::single("x", x), SampleFamily::single("y", y), 1), ShapeError);
    EXPECT_THROW((void)check_uncorrelated(SampleFamily::single("x", x), SampleFamily::single("y", x), 0),
                 InvalidArgument);
    Eigen::MatrixXd wide(100, 10);
    for (int c = 0; c < 10; ++c) wide.col(c) = gaussian(c + 100, 100);
    const SampleFamily w({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}, wide);
    EXPECT_THROW((void)check_uncorrelated(w, w, 6), BudgetError);
    EXPECT_THROW((void)check_uncorrelated(w, w, 1, 5.0, 50), BudgetError);
}

TEST(Uncorrelated, GradedLexOrder) {
    const auto x = gaussian(5, 200);
    Eigen::MatrixXd y2(200, 2);
    y2.col(0) = gaussian(6, 200);
    y2.col(1) = gaussian(7, 200);
    const auto r = check_uncorrelated(SampleFamily::single("x", x), SampleFamily({"u", "v"}, y2), 2);
    int prev = 0;
    for (const auto& m : r.monomials) {
        EXPECT_GE(m.order(), prev);
        prev = m.order();
    }
}

TEST(ProductSample, SingleTermIsRescaledSurface) {
    const auto pb = sqexp_product(1);
    const auto& bx = pb->basis_x();
    const auto& by = pb->basis_y();
    for (const auto& f : product_sample(pb, 4, 5)) {
        const double g = bx.features(0.3, 1)(0), h = by.features(0.8, 1)(0);
        EXPECT_NEAR(f(0.3, 0.8), f.coeffs_x()(0) * f.coeffs_y()(0) * g * h, 1e-14);
    }
}

TEST(ProductSample, DeterministicAndIndependentStreams) {
    const auto pb = sqexp_product(3);
    const auto a = product_sample(pb, 17, 3);
    const auto b = product_sample(pb, 17, 3);
    for (int r = 0; r < 3; ++r) {
        EXPECT_EQ(a[r].coeffs_x(), b[r].coeffs_x());
        EXPECT_EQ(a[r].coeffs_y(), b[r].coeffs_y());
        EXPECT_NE(a[r].coeffs_x(), a[r].coeffs_y());
    }
}

TEST(ProductSample, EvaluationIsProductOfFactors) {
    const auto pb = sqexp_product(4);
    const auto f = product_sample(pb, 1, 1)[0];
    EXPECT_NEAR(f(0.2, 0.6), f.factor_x(0.2) * f.factor_y(0.6), 1e-14);
    const auto g = f.grid(Eigen::Vector2d(0.0, 0.2), Eigen::Vector2d(0.6, 1.0));
    EXPECT_NEAR(g(1, 0), f(0.2, 0.6), 1e-14);
}

TEST(ProductSample, TheoreticalCovarianceIsTruncatedKernel) {
    const auto pb = sqexp_product(5);
    const Point p{{0.1, 0.9}}, q{{0.6, 0.3}};
    const double expected = pb->basis_x().features(0.1, 5).dot(pb->basis_x().features(0.6, 5)) *
                            pb->basis_y().features(0.9, 5).dot(pb->basis_y().features(0.3, 5));
    EXPECT_NEAR(product_process_covariance(*pb, p, q), expected, 1e-14);
    EXPECT_NEAR(pb->truncated_covariance(p, q), expected, 1e-14);
}

TEST(ProductSample, EmpiricalMeanIsZero) {
    const auto pb = sqexp_product(5);
    const auto fields = product_sample(pb, 88, 4000);
    const Point probe{{0.4, 0.7}};
    Eigen::VectorXd v(4000);
    for (int r = 0; r < 4000; ++r) v(r) = fields[r](probe);
    const double se = std::sqrt((v.array() - v.mean()).square().sum() / 3999.0 / 4000.0);
    EXPECT_LE(std::abs(v.mean()), 5.0 * se);
}

TEST(Diagnostics, TooFewSamples) {
    EXPECT_THROW((void)distribution_diagnostics(gaussian(1, 999)), SampleSizeError);
}

TEST(Diagnostics, KnownMoments) {
    const auto s = distribution_diagnostics(gaussian(3, 200000));
    EXPECT_NEAR(s.mean, 0.0, 0.02);
    EXPECT_NEAR(s.variance, 1.0, 0.02);
    EXPECT_NEAR(s.skewness, 0.0, 0.03);
    EXPECT_NEAR(s.kurtosis, 3.0, 0.05);
    Eigen::VectorXd pm(1000);
    for (int i = 0; i < 1000; ++i) pm(i) = i % 2 ? 1.0 : -1.0;
    EXPECT_NEAR(distribution_diagnostics(pm).kurtosis, 1.0, 1e-12);
}

TEST(Diagnostics, GaussianKLFieldLooksGaussian) {
    const auto pb = sqexp_product(1);
    const auto fields = kl_sample(pb, 31, 20000);
    const auto s = distribution_diagnostics(fields, Point{{0.5, 0.5}});
    EXPECT_NEAR(s.kurtosis, 3.0, 0.2);
    EXPECT_NEAR(s.skewness, 0.0, 0.1);
}

TEST(Diagnostics, MultiTermKLFieldHasNoSkew) {
    const auto pb = sqexp_product(5);
    const auto s = distribution_diagnostics(kl_sample(pb, 32, 20000), Point{{0.2, 0.7}});
    EXPECT_LE(std::abs(s.skewness), 5.0 * std::sqrt(6.0 / 20000.0));
}

TEST(Diagnostics, ProductFieldKurtosis) {
    const auto pb = sqexp_product(1);
    const auto g = distribution_diagnostics(product_sample(pb, 33, 100000), Point{{0.5, 0.5}});
    EXPECT_NEAR(g.kurtosis, 9.0, 0.5);
    const auto rad = distribution_diagnostics(
        product_sample(pb, 34, 5000, CoefficientLaw::Rademacher, CoefficientLaw::Rademacher), Point{{0.5, 0.5}});
    EXPECT_NEAR(rad.kurtosis, 1.0, 1e-3);
}

TEST(SecondOrderCheck, DefaultBasisPasses) {
    const auto pb = sqexp_product(6);
    const auto probes = default_probe_pairs(*pb);
    ASSERT_EQ(probes.size(), 6u);
    const auto r = second_order_identical_check(pb, 4000, probes, 2026);
    EXPECT_TRUE(r.pass);
    for (const auto& c : r.pairs) {
        EXPECT_TRUE(c.kl_matches_product);
        EXPECT_TRUE(c.kl_matches_exact);
        EXPECT_TRUE(c.product_matches_exact);
        EXPECT_NEAR(c.theoretical_kl, c.theoretical_product, 1e-14);
        EXPECT_NEAR(c.theoretical_kl, c.exact, 1e-6);
    }
}

TEST(SecondOrderCheck, ConstantKernelsTheoreticalEquality) {
    const auto pb = constant_product();
    const auto r = second_order_identical_check(pb, 1000, default_probe_pairs(*pb), 5);
    for (const auto& c : r.pairs) {
        EXPECT_EQ(c.theoretical_kl, c.theoretical_product);
        EXPECT_NEAR(c.exact, 1.0, 1e-12);
    }
}

TEST(SecondOrderCheck, MismatchedTruncationIsDetected) {
    const auto pb = sqexp_product(6);
    const auto r = second_order_identical_check(pb, 4000, default_probe_pairs(*pb), 2026, 1);
    EXPECT_FALSE(r.pass);
    bool any = false;
    for (const auto& c : r.pairs) any = any || !c.kl_matches_product;
    EXPECT_TRUE(any);
}
