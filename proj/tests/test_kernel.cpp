#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sepcov/errors.hpp"
#include "sepcov/kernel.hpp"
#include "sepcov/random.hpp"

using namespace sepcov;

namespace {

SeparableKernel sqexp2(double v1, double t1, double v2, double t2) {
    return SeparableKernel({Kernel1D::squared_exponential(v1, t1), Kernel1D::squared_exponential(v2, t2)});
}

Point pt(double x, double y) { return Point{{x, y}}; }

SeparableKernel random_kernel(Rng& rng) {
    std::uniform_real_distribution<double> var(0.2, 5.0), theta(0.3, 4.0), alpha(0.5, 2.0), coin(0.0, 1.0);
    std::vector<Kernel1D> f;
    for (int d = 0; d < 2; ++d) {
        if (coin(rng) < 0.5) {
            f.push_back(Kernel1D::squared_exponential(var(rng), theta(rng)));
        } else {
            f.push_back(Kernel1D::power_exponential(var(rng), theta(rng), alpha(rng)));
        }
    }
    return SeparableKernel(std::move(f));
}

}  // namespace

TEST(Interval, RejectsEmptyAndInfinite) {
    EXPECT_THROW(Interval(1.0, 1.0), InvalidArgument);
    EXPECT_THROW(Interval(2.0, 1.0), InvalidArgument);
    EXPECT_THROW(Interval(0.0, INFINITY), InvalidArgument);
    EXPECT_THROW(Interval(NAN, 1.0), InvalidArgument);
    EXPECT_NO_THROW(Interval(-1.0, 1.0));
}

TEST(Kernel1D, ParameterValidation) {
    EXPECT_THROW(Kernel1D::squared_exponential(0.0, 1.0), InvalidArgument);
    EXPECT_THROW(Kernel1D::squared_exponential(1.0, -1.0), InvalidArgument);
    EXPECT_THROW(Kernel1D::power_exponential(1.0, 1.0, 2.5), InvalidArgument);
    EXPECT_THROW(Kernel1D::power_exponential(1.0, 1.0, 0.0), InvalidArgument);
    EXPECT_NO_THROW(Kernel1D::power_exponential(1.0, 1.0, 2.0));
}

TEST(Kernel1D, SquaredExponentialValues) {
    const auto k = Kernel1D::squared_exponential(1.0, 1.0);
    EXPECT_DOUBLE_EQ(eval_1d(k, 0.0, 0.0), 1.0);
    EXPECT_NEAR(eval_1d(k, 0.0, 1.0), 0.3678794, 1e-7);
    const auto k2 = Kernel1D::squared_exponential(4.0, 0.5, Interval(0.0, 2.0));
    EXPECT_NEAR(eval_1d(k2, 0.0, 2.0), 1.4715178, 1e-7);
}

TEST(Kernel1D, PowerExponentialMatchesFormula) {
    const auto k = Kernel1D::power_exponential(2.0, 3.0, 1.3);
    EXPECT_NEAR(k(0.1, 0.6), 2.0 * std::exp(-std::pow(3.0 * 0.5, 1.3)), 1e-15);
    const auto two = Kernel1D::power_exponential(1.0, 1.5, 2.0);
    const auto sq = Kernel1D::squared_exponential(1.0, 1.5);
    EXPECT_NEAR(two(0.2, 0.9), sq(0.2, 0.9), 1e-15);
}

TEST(Kernel1D, OutOfDomainThrows) {
    const auto k = Kernel1D::squared_exponential(1.0, 1.0);
    EXPECT_THROW((void)eval_1d(k, -0.1, 0.5), DomainError);
    EXPECT_THROW((void)eval_1d(k, 0.5, 1.0001), DomainError);
}

TEST(Kernel1D, DiagonalAndSymmetry) {
    Rng rng = make_stream(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const auto k = random_kernel(rng).factor(0);
        const double x = u(rng), y = u(rng);
        EXPECT_DOUBLE_EQ(k(x, x), k.variance());
        EXPECT_EQ(k(x, y), k(y, x));
    }
}

TEST(SeparableKernel, ProductValues) {
    const auto k = sqexp2(1, 1, 1, 1);
    EXPECT_DOUBLE_EQ(eval_separable(k, pt(0, 0), pt(0, 0)), 1.0);
    EXPECT_NEAR(eval_separable(k, pt(0, 0), pt(1, 1)), 0.1353353, 1e-7);
    const auto k23 = sqexp2(2, 1, 3, 1);
    EXPECT_DOUBLE_EQ(eval_separable(k23, pt(0.3, 0.7), pt(0.3, 0.7)), 6.0);
    EXPECT_DOUBLE_EQ(k23.total_variance(), 6.0);
}

TEST(SeparableKernel, DimensionMismatchThrows) {
    const auto k = sqexp2(1, 1, 1, 1);
    EXPECT_THROW((void)eval_separable(k, Point{{0.1}}, pt(0, 0)), ShapeError);
    EXPECT_THROW(SeparableKernel(std::vector<Kernel1D>{}), InvalidArgument);
}

TEST(SeparableKernel, CanonicalMovesVarianceToFirstFactor) {
    const auto k = sqexp2(2, 1.5, 3, 0.5);
    const auto c = k.canonical();
    EXPECT_DOUBLE_EQ(c.factor(0).variance(), 6.0);
    EXPECT_DOUBLE_EQ(c.factor(1).variance(), 1.0);
    EXPECT_NEAR(c(pt(0.1, 0.2), pt(0.8, 0.4)), k(pt(0.1, 0.2), pt(0.8, 0.4)), 1e-15);
}

TEST(SeparableKernel, SymmetryAndFactorization) {
    Rng rng = make_stream(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const auto k = random_kernel(rng);
        const double x = u(rng), x2 = u(rng), y = u(rng), y2 = u(rng);
        EXPECT_EQ(k(pt(x, y), pt(x2, y2)), k(pt(x2, y2), pt(x, y)));
        // Exchanging the y-arguments between two kernel evaluations leaves the product unchanged.
        const double x3 = u(rng), x4 = u(rng), y3 = u(rng), y4 = u(rng);
        const double lhs = k(pt(x, y), pt(x2, y2)) * k(pt(x3, y3), pt(x4, y4));
        const double rhs = k(pt(x, y3), pt(x2, y4)) * k(pt(x3, y), pt(x4, y2));
        EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, std::abs(lhs)));
        const double diag = k(pt(x, y), pt(x2, y2)) * k(pt(x, y), pt(x, y));
        const double cross = k(pt(x, y), pt(x2, y)) * k(pt(x, y), pt(x, y2));
        EXPECT_NEAR(diag, cross, 1e-13 * std::max(1.0, std::abs(diag)));
    }
}

TEST(Gram, SmallCases) {
    const auto k = sqexp2(2, 1, 3, 1);
    PointSet one(1, 2);
    one << 0.4, 0.6;
    const auto g1 = gram(k, one);
    ASSERT_EQ(g1.rows(), 1);
    EXPECT_DOUBLE_EQ(g1(0, 0), 6.0);

    PointSet dup(2, 2);
    dup << 0.4, 0.6, 0.4, 0.6;
    const auto g2 = gram(k, dup);
    EXPECT_TRUE((g2.array() == 6.0).all());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g2);
    EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-12);
}

TEST(Gram, OutOfDomainThrows) {
    PointSet bad(2, 2);
    bad << 0.1, 0.2, 1.5, 0.2;
    EXPECT_THROW((void)gram(sqexp2(1, 1, 1, 1), bad), DomainError);
}

TEST(Gram, PsdOnRandomPointSets) {
    Rng rng = make_stream(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> count(2, 64);
    for (int t = 0; t < 40; ++t) {
        const auto k = random_kernel(rng);
        PointSet pts(count(rng), 2);
        for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
        const auto g = gram(k, pts);
        EXPECT_TRUE(g.isApprox(g.transpose(), 0.0));
        EXPECT_GE(min_eigenvalue(g), -kPsdTolerance * g.diagonal().maxCoeff());
        EXPECT_TRUE(is_psd(g));
    }
}

TEST(Gram, FivePointsEigenOracle) {
    Rng rng = make_stream(14);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointSet pts(5, 2);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
    const auto g = gram(sqexp2(1, 1, 1, 1), pts);
    Eigen::EigenSolver<Eigen::MatrixXd> general(g);
    for (Eigen::Index i = 0; i < 5; ++i) {
        EXPECT_NEAR(general.eigenvalues()(i).imag(), 0.0, 1e-12);
        EXPECT_GE(general.eigenvalues()(i).real(), -1e-10);
    }
}

TEST(Isotropy, CommonThetaSquaredExponentialIsRotationInvariant) {
    EXPECT_LE(isotropy_residual(sqexp2(1, 1, 1, 1)), 1e-12);
    EXPECT_LE(isotropy_residual(sqexp2(3, 2.5, 0.5, 2.5)), 1e-12);
}

TEST(Isotropy, CounterexamplesHavePositiveResidual) {
    EXPECT_GT(isotropy_residual(sqexp2(1, 1, 1, 2)), 1e-3);
    const SeparableKernel pe({Kernel1D::power_exponential(1, 1, 1), Kernel1D::power_exponential(1, 1, 1)});
    EXPECT_GT(isotropy_residual(pe), 1e-3);
}

TEST(Isotropy, RequiresTwoFactors) {
    const SeparableKernel k1({Kernel1D::squared_exponential(1, 1)});
    EXPECT_THROW((void)isotropy_residual(k1), ShapeError);
}

TEST(ConditionalCovariance, VanishesForRightAngleGeometry) {
    const auto k = sqexp2(1, 1, 1, 1);
    PointSet c(1, 2);
    c << 1.0, 0.0;
    const auto r = conditional_covariance(k, pt(0, 0), pt(1, 1), c);
    EXPECT_LE(std::abs(r.value), 1e-12);
}

TEST(ConditionalCovariance, EmptyConditioningIsPriorCovariance) {
    const auto k = sqexp2(2, 1, 3, 2);
    const auto r = conditional_covariance(k, pt(0.3, 0.4), pt(0.3, 0.4), PointSet(0, 2));
    EXPECT_DOUBLE_EQ(r.value, 6.0);
    EXPECT_EQ(r.jitter, 0.0);
}

TEST(ConditionalCovariance, MatchesDenseFormula) {
    const auto k = sqexp2(1.5, 1.2, 0.7, 2.0);
    PointSet c(3, 2);
    c << 0.1, 0.2, 0.5, 0.9, 0.8, 0.3;
    const Point a = pt(0.4, 0.4), b = pt(0.7, 0.6);
    const auto g = gram(k, c);
    Eigen::VectorXd ka(3), kb(3);
    for (int i = 0; i < 3; ++i) {
        ka(i) = k(a, c.row(i).transpose());
        kb(i) = k(c.row(i).transpose(), b);
    }
    const double oracle = k(a, b) - ka.dot(g.fullPivLu().solve(kb));
    EXPECT_NEAR(conditional_covariance(k, a, b, c).value, oracle, 1e-12);
}

TEST(ConditionalCovariance, RegressionAugmentedKernelDoesNotVanish) {
    const auto k = sqexp2(1, 1, 1, 1);
    const CovarianceFn cov = [k](const Point& p, const Point& q) { return k(p, q) + p(0) * q(0); };
    PointSet c(1, 2);
    c << 1.0, 0.0;
    EXPECT_GT(std::abs(conditional_covariance(cov, pt(0, 0), pt(1, 1), c).value), 1e-3);
}

TEST(ConditionalCovariance, RandomRightAngleConfigurations) {
    Rng rng = make_stream(15);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const auto k = random_kernel(rng);
        const double x = u(rng), y = u(rng), x2 = u(rng), y2 = u(rng);
        PointSet c(1, 2);
        c << x2, y;
        EXPECT_LE(std::abs(conditional_covariance(k, pt(x, y), pt(x2, y2), c).value), 1e-10);
    }
}

TEST(ConditionalCovariance, DuplicateConditioningUsesJitter) {
    const auto k = sqexp2(1, 1, 1, 1);
    PointSet c(2, 2);
    c << 0.5, 0.5, 0.5, 0.5;
    const auto r = conditional_covariance(k, pt(0.2, 0.2), pt(0.2, 0.2), c);
    EXPECT_GT(r.jitter, 0.0);
    EXPECT_TRUE(std::isfinite(r.value));
}

TEST(CrossCorrelation, IndependentOfX) {
    const auto k = sqexp2(1, 1, 1, 1);
    for (double x : {0.0, 0.3, 0.9}) EXPECT_NEAR(cross_correlation(k, x, 0.0, 1.0), std::exp(-1.0), 1e-15);
    const auto k2 = SeparableKernel({Kernel1D::squared_exponential(5, 2), Kernel1D::squared_exponential(7, 3)});
    EXPECT_NEAR(cross_correlation(k2, 0.4, 0.0, 0.5), std::exp(-9.0 * 0.25), 1e-15);
    EXPECT_DOUBLE_EQ(cross_correlation(k2, 0.7, 0.3, 0.3), 1.0);
}

TEST(CrossCorrelation, VariationOverRandomXIsRoundoff) {
    Rng rng = make_stream(16);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int cfg = 0; cfg < 20; ++cfg) {
        const auto k = random_kernel(rng);
        const double y = u(rng), y2 = u(rng);
        double lo = INFINITY, hi = -INFINITY;
        for (int i = 0; i < 50; ++i) {
            const double c = cross_correlation(k, u(rng), y, y2);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        EXPECT_LE(hi - lo, 1e-12);
    }
}
