#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sepcov/errors.hpp"

namespace sepcov {

using Point = Eigen::VectorXd;
/// A list of points, one per row.
using PointSet = Eigen::MatrixXd;

/// Closed and bounded interval [lo, hi] with lo < hi.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double lo_, double hi_);

    [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
    [[nodiscard]] double width() const { return hi - lo; }
    [[nodiscard]] double center() const { return 0.5 * (lo + hi); }

    bool operator==(const Interval&) const = default;
};

enum class KernelFamily {
    SquaredExponential,  // sigma^2 exp(-theta^2 d^2)
    PowerExponential,    // sigma^2 exp(-(theta |d|)^alpha), 0 < alpha <= 2
    Constant,            // sigma^2, rank one
};

/// One-dimensional stationary covariance function on a closed interval.
///
/// `length_scale` is the rate theta multiplying the distance inside the
/// exponent, so larger values give shorter correlation ranges.
class Kernel1D {
public:
    static Kernel1D squared_exponential(double variance, double length_scale,
                                        Interval domain = {});
    static Kernel1D power_exponential(double variance, double length_scale, double exponent,
                                      Interval domain = {});
    static Kernel1D constant(double variance, Interval domain = {});

    /// Covariance between x and x2. Throws DomainError outside the domain.
    [[nodiscard]] double operator()(double x, double x2) const;

    /// Same formula without the domain check; used for rotated probes.
    [[nodiscard]] double eval_unchecked(double x, double x2) const;

    /// Correlation as a function of the signed lag.
    [[nodiscard]] double correlation(double lag) const;

    [[nodiscard]] Eigen::MatrixXd gram(const Eigen::VectorXd& xs) const;

    [[nodiscard]] KernelFamily family() const { return family_; }
    [[nodiscard]] double variance() const { return variance_; }
    [[nodiscard]] double length_scale() const { return length_scale_; }
    [[nodiscard]] double exponent() const { return exponent_; }
    [[nodiscard]] const Interval& domain() const { return domain_; }

    [[nodiscard]] Kernel1D with_variance(double variance) const;

    bool operator==(const Kernel1D&) const = default;

private:
    Kernel1D(KernelFamily family, double variance, double length_scale, double exponent,
             Interval domain);

    KernelFamily family_;
    double variance_;
    double length_scale_;
    double exponent_;
    Interval domain_;
};

/// Product of one-dimensional kernels, one factor per input dimension.
class SeparableKernel {
public:
    explicit SeparableKernel(std::vector<Kernel1D> factors);

    [[nodiscard]] std::size_t dim() const { return factors_.size(); }
    [[nodiscard]] const std::vector<Kernel1D>& factors() const { return factors_; }
    [[nodiscard]] const Kernel1D& factor(std::size_t d) const { return factors_.at(d); }

    /// Product of the per-factor variances.
    [[nodiscard]] double total_variance() const;

    [[nodiscard]] double operator()(const Point& p, const Point& q) const;
    [[nodiscard]] double eval_unchecked(const Point& p, const Point& q) const;

    /// Throws DomainError or ShapeError if `p` is not a valid input.
    void check_point(const Point& p) const;

    /// Same kernel with total variance on factor 0 and unit variance elsewhere.
    [[nodiscard]] SeparableKernel canonical() const;

    [[nodiscard]] std::vector<Interval> domains() const;

    bool operator==(const SeparableKernel&) const = default;

private:
    std::vector<Kernel1D> factors_;
};

/// Generic covariance function on points, for kernels that need not be separable.
using CovarianceFn = std::function<double(const Point&, const Point&)>;

[[nodiscard]] CovarianceFn as_covariance(const SeparableKernel& k);

[[nodiscard]] double eval_1d(const Kernel1D& k, double x, double x2);
[[nodiscard]] double eval_separable(const SeparableKernel& k, const Point& p, const Point& q);

/// Gram matrix over the rows of `pts`; validates every point.
[[nodiscard]] Eigen::MatrixXd gram(const SeparableKernel& k, const PointSet& pts);
[[nodiscard]] Eigen::MatrixXd gram(const CovarianceFn& cov, const PointSet& pts);
[[nodiscard]] Eigen::MatrixXd cross_gram(const CovarianceFn& cov, const PointSet& a,
                                         const PointSet& b);

/// Relative PSD tolerance applied to the maximum diagonal entry.
inline constexpr double kPsdTolerance = 1e-10;

/// Smallest eigenvalue of a symmetric matrix.
[[nodiscard]] double min_eigenvalue(const Eigen::MatrixXd& sym);

/// True when min eigenvalue >= -tol * max diagonal.
[[nodiscard]] bool is_psd(const Eigen::MatrixXd& sym, double tol = kPsdTolerance);

/// Max |k(p,q) - k(Rp,Rq)| over a fixed probe set, R a rotation by pi/4
/// about the domain center. Zero only for rotation-invariant kernels.
[[nodiscard]] double isotropy_residual(const SeparableKernel& k);

struct ConditionalCovariance {
    double value = 0.0;
    double jitter = 0.0;  ///< Added to the conditioning Gram diagonal.
};

/// Gaussian conditional covariance cov(F(a), F(b) | F(c_1..c_n)).
///
/// When the conditioning Gram has condition number above 1e12 a jitter of
/// 1e-10 * max diagonal is added and reported.
[[nodiscard]] ConditionalCovariance conditional_covariance(const CovarianceFn& cov,
                                                           const Point& a, const Point& b,
                                                           const PointSet& conditioning);
[[nodiscard]] ConditionalCovariance conditional_covariance(const SeparableKernel& k,
                                                           const Point& a, const Point& b,
                                                           const PointSet& conditioning);

/// corr{F(x,y), F(x,y2)} for a two-factor kernel, evaluated through the
/// full product.
[[nodiscard]] double cross_correlation(const SeparableKernel& k, double x, double y, double y2);

}  // namespace sepcov
