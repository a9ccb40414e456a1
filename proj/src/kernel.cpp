#include "sepcov/kernel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sepcov {

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        std::ostringstream os;
        os << "interval requires finite lo < hi, got [" << lo << ", " << hi << "]";
        throw InvalidArgument(os.str());
    }
}

Kernel1D::Kernel1D(KernelFamily family, double variance, double length_scale, double exponent,
                   Interval domain)
    : family_(family),
      variance_(variance),
      length_scale_(length_scale),
      exponent_(exponent),
      domain_(domain) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw InvalidArgument("kernel variance must be positive and finite");
    }
    if (family != KernelFamily::Constant && (!(length_scale > 0.0) || !std::isfinite(length_scale))) {
        throw InvalidArgument("kernel length_scale must be positive and finite");
    }
    if (family == KernelFamily::PowerExponential && !(exponent > 0.0 && exponent <= 2.0)) {
        throw InvalidArgument("power-exponential exponent must lie in (0, 2]");
    }
}

Kernel1D Kernel1D::squared_exponential(double variance, double length_scale, Interval domain) {
    return {KernelFamily::SquaredExponential, variance, length_scale, 2.0, domain};
}

Kernel1D Kernel1D::power_exponential(double variance, double length_scale, double exponent,
                                     Interval domain) {
    return {KernelFamily::PowerExponential, variance, length_scale, exponent, domain};
}

Kernel1D Kernel1D::constant(double variance, Interval domain) {
    return {KernelFamily::Constant, variance, 1.0, 0.0, domain};
}

Kernel1D Kernel1D::with_variance(double variance) const {
    return {family_, variance, length_scale_, exponent_, domain_};
}

double Kernel1D::correlation(double lag) const {
    switch (family_) {
        case KernelFamily::SquaredExponential: {
            const double s = length_scale_ * lag;
            return std::exp(-s * s);
        }
        case KernelFamily::PowerExponential:
            return std::exp(-std::pow(length_scale_ * std::abs(lag), exponent_));
        case KernelFamily::Constant:
            return 1.0;
    }
    return 0.0;
}

double Kernel1D::eval_unchecked(double x, double x2) const {
    return variance_ * correlation(x - x2);
}

double Kernel1D::operator()(double x, double x2) const {
    if (!domain_.contains(x) || !domain_.contains(x2)) {
        std::ostringstream os;
        os << "kernel argument outside domain [" << domain_.lo << ", " << domain_.hi
           << "]: (" << x << ", " << x2 << ")";
        throw DomainError(os.str());
    }
    return eval_unchecked(x, x2);
}

Eigen::MatrixXd Kernel1D::gram(const Eigen::VectorXd& xs) const {
    const Eigen::Index n = xs.size();
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = (*this)(xs(i), xs(i));
        for (Eigen::Index j = 0; j < i; ++j) {
            g(i, j) = g(j, i) = eval_unchecked(xs(i), xs(j));
        }
    }
    return g;
}

SeparableKernel::SeparableKernel(std::vector<Kernel1D> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw InvalidArgument("separable kernel needs at least one factor");
}

double SeparableKernel::total_variance() const {
    double v = 1.0;
    for (const auto& f : factors_) v *= f.variance();
    return v;
}

void SeparableKernel::check_point(const Point& p) const {
    if (static_cast<std::size_t>(p.size()) != factors_.size()) {
        std::ostringstream os;
        os << "point has " << p.size() << " coordinates, kernel has " << factors_.size()
           << " factors";
        throw ShapeError(os.str());
    }
    for (std::size_t d = 0; d < factors_.size(); ++d) {
        const auto& dom = factors_[d].domain();
        if (!dom.contains(p(static_cast<Eigen::Index>(d)))) {
            std::ostringstream os;
            os << "coordinate " << d << " = " << p(static_cast<Eigen::Index>(d))
               << " outside [" << dom.lo << ", " << dom.hi << "]";
            throw DomainError(os.str());
        }
    }
}

double SeparableKernel::eval_unchecked(const Point& p, const Point& q) const {
    double v = 1.0;
    for (std::size_t d = 0; d < factors_.size(); ++d) {
        const auto i = static_cast<Eigen::Index>(d);
        v *= factors_[d].eval_unchecked(p(i), q(i));
    }
    return v;
}

double SeparableKernel::operator()(const Point& p, const Point& q) const {
    check_point(p);
    check_point(q);
    return eval_unchecked(p, q);
}

SeparableKernel SeparableKernel::canonical() const {
    std::vector<Kernel1D> out;
    out.reserve(factors_.size());
    out.push_back(factors_[0].with_variance(total_variance()));
    for (std::size_t d = 1; d < factors_.size(); ++d) out.push_back(factors_[d].with_variance(1.0));
    return SeparableKernel(std::move(out));
}

std::vector<Interval> SeparableKernel::domains() const {
    std::vector<Interval> out;
    for (const auto& f : factors_) out.push_back(f.domain());
    return out;
}

CovarianceFn as_covariance(const SeparableKernel& k) {
    return [k](const Point& p, const Point& q) { return k(p, q); };
}

double eval_1d(const Kernel1D& k, double x, double x2) { return k(x, x2); }

double eval_separable(const SeparableKernel& k, const Point& p, const Point& q) {
    return k(p, q);
}

Eigen::MatrixXd gram(const SeparableKernel& k, const PointSet& pts) {
    const Eigen::Index n = pts.rows();
    for (Eigen::Index i = 0; i < n; ++i) k.check_point(pts.row(i).transpose());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point pi = pts.row(i).transpose();
        for (Eigen::Index j = 0; j <= i; ++j) {
            g(i, j) = g(j, i) = k.eval_unchecked(pi, pts.row(j).transpose());
        }
    }
    return g;
}

Eigen::MatrixXd gram(const CovarianceFn& cov, const PointSet& pts) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point pi = pts.row(i).transpose();
        for (Eigen::Index j = 0; j <= i; ++j) {
            g(i, j) = g(j, i) = cov(pi, pts.row(j).transpose());
        }
    }
    return g;
}

Eigen::MatrixXd cross_gram(const CovarianceFn& cov, const PointSet& a, const PointSet& b) {
    Eigen::MatrixXd g(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const Point pi = a.row(i).transpose();
        for (Eigen::Index j = 0; j < b.rows(); ++j) g(i, j) = cov(pi, b.row(j).transpose());
    }
    return g;
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
    if (sym.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigen-solve failed");
    return es.eigenvalues().minCoeff();
}

bool is_psd(const Eigen::MatrixXd& sym, double tol) {
    if (sym.rows() == 0) return true;
    const double scale = sym.diagonal().cwiseAbs().maxCoeff();
    return min_eigenvalue(sym) >= -tol * scale;
}

double isotropy_residual(const SeparableKernel& k) {
    if (k.dim() != 2) throw ShapeError("isotropy_residual needs a two-factor kernel");
    const auto& dx = k.factor(0).domain();
    const auto& dy = k.factor(1).domain();
    const double cx = dx.center();
    const double cy = dy.center();
    // Probes stay in the inscribed disk, which the rotation maps to itself.
    const double radius = 0.5 * std::min(dx.width(), dy.width());
    const double angle = std::numbers::pi / 4.0;
    const double c = std::cos(angle);
    const double s = std::sin(angle);

    auto rotate = [&](const Point& p) {
        Point r(2);
        const double ux = p(0) - cx;
        const double uy = p(1) - cy;
        r(0) = cx + c * ux - s * uy;
        r(1) = cy + s * ux + c * uy;
        return r;
    };

    double worst = 0.0;
    constexpr int kPairs = 16;
    for (int i = 0; i < kPairs; ++i) {
        const double a1 = 2.0 * std::numbers::pi * i / kPairs + 0.1;
        const double a2 = a1 + std::numbers::pi * (0.35 + 0.04 * i);
        const double r1 = radius * (0.15 + 0.05 * (i % 8));
        const double r2 = radius * (0.9 - 0.05 * (i % 5));
        Point p(2), q(2);
        p << cx + r1 * std::cos(a1), cy + r1 * std::sin(a1);
        q << cx + r2 * std::cos(a2), cy + r2 * std::sin(a2);
        const double before = k.eval_unchecked(p, q);
        const double after = k.eval_unchecked(rotate(p), rotate(q));
        worst = std::max(worst, std::abs(before - after));
    }
    return worst;
}

ConditionalCovariance conditional_covariance(const CovarianceFn& cov, const Point& a,
                                             const Point& b, const PointSet& conditioning) {
    ConditionalCovariance out;
    out.value = cov(a, b);
    const Eigen::Index n = conditioning.rows();
    if (n == 0) return out;

    Eigen::MatrixXd kc = gram(cov, conditioning);
    Eigen::VectorXd ka(n), kb(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point ci = conditioning.row(i).transpose();
        ka(i) = cov(a, ci);
        kb(i) = cov(ci, b);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kc, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin <= 0.0 || lmax / lmin > 1e12) {
        out.jitter = 1e-10 * kc.diagonal().maxCoeff();
        kc.diagonal().array() += out.jitter;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(kc);
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "conditioning Gram is singular (min eigenvalue " << lmin << ", jitter "
           << out.jitter << ")";
        throw NumericalError(os.str());
    }
    out.value -= ka.dot(llt.solve(kb));
    return out;
}

ConditionalCovariance conditional_covariance(const SeparableKernel& k, const Point& a,
                                             const Point& b, const PointSet& conditioning) {
    k.check_point(a);
    k.check_point(b);
    for (Eigen::Index i = 0; i < conditioning.rows(); ++i) {
        k.check_point(conditioning.row(i).transpose());
    }
    return conditional_covariance(
        [&k](const Point& p, const Point& q) { return k.eval_unchecked(p, q); }, a, b,
        conditioning);
}

double cross_correlation(const SeparableKernel& k, double x, double y, double y2) {
    if (k.dim() != 2) throw ShapeError("cross_correlation needs a two-factor kernel");
    Point p(2), q(2);
    p << x, y;
    q << x, y2;
    return k(p, q) / std::sqrt(k(p, p) * k(q, q));
}

}  // namespace sepcov
