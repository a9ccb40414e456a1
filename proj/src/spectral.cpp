#include "sepcov/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sepcov/parallel.hpp"

namespace sepcov {

Quadrature gauss_legendre(int m, const Interval& domain) {
    if (m < 1) throw InvalidArgument("quadrature needs at least one node");
    Quadrature q{Eigen::VectorXd(m), Eigen::VectorXd(m)};
    const double half = 0.5 * domain.width();
    const double mid = domain.center();
    for (int i = 0; i < (m + 1) / 2; ++i) {
        // Newton iteration on P_m from the Chebyshev-like initial guess.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int k = 1; k <= m; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = m * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        // recompute derivative at the converged root
        {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int k = 1; k <= m; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = m * (z * p0 - p1) / (z * z - 1.0);
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        q.nodes(i) = mid - half * z;
        q.nodes(m - 1 - i) = mid + half * z;
        q.weights(i) = q.weights(m - 1 - i) = half * w;
    }
    return q;
}

SpectralBasis::SpectralBasis(Kernel1D kernel, Quadrature quad, Eigen::VectorXd eigenvalues,
                             Eigen::MatrixXd node_values)
    : kernel_(std::move(kernel)),
      quad_(std::move(quad)),
      eigenvalues_(std::move(eigenvalues)),
      node_values_(std::move(node_values)) {
    if (quad_.nodes.size() != quad_.weights.size()) {
        throw ShapeError("quadrature nodes and weights differ in length");
    }
    if (node_values_.rows() != quad_.nodes.size() || node_values_.cols() != eigenvalues_.size()) {
        throw ShapeError("node eigenvector matrix must be m x r");
    }
    if ((quad_.weights.array() <= 0.0).any()) throw NumericalError("non-positive quadrature weight");
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
        if (!(eigenvalues_(i) > 0.0)) throw NumericalError("eigenvalues must be positive");
        if (i > 0 && eigenvalues_(i) > eigenvalues_(i - 1)) {
            throw NumericalError("eigenvalues must be descending");
        }
    }
}

Eigen::VectorXd SpectralBasis::eigenfunctions(double x) const {
    const Eigen::Index m = quad_.nodes.size();
    Eigen::VectorXd kw(m);
    for (Eigen::Index k = 0; k < m; ++k) kw(k) = quad_.weights(k) * kernel_(x, quad_.nodes(k));
    return (node_values_.transpose() * kw).cwiseQuotient(eigenvalues_);
}

Eigen::VectorXd SpectralBasis::features(double x, int n) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    const int r = std::min(n, rank());
    if (r == 0) return out;
    const Eigen::VectorXd psi = eigenfunctions(x);
    out.head(r) = psi.head(r).cwiseProduct(eigenvalues_.head(r).cwiseSqrt());
    return out;
}

Eigen::MatrixXd SpectralBasis::feature_matrix(const Eigen::VectorXd& xs, int n) const {
    Eigen::MatrixXd out(xs.size(), n);
    for (Eigen::Index a = 0; a < xs.size(); ++a) out.row(a) = features(xs(a), n).transpose();
    return out;
}

double SpectralBasis::trace_integral() const {
    double s = 0.0;
    for (Eigen::Index k = 0; k < quad_.nodes.size(); ++k) {
        s += quad_.weights(k) * kernel_(quad_.nodes(k), quad_.nodes(k));
    }
    return s;
}

SpectralBasis nystrom_decompose(const Kernel1D& k, int m, int max_rank, double tol) {
    if (m < 4) throw InvalidArgument("nystrom_decompose needs at least 4 nodes");
    if (max_rank < 0) max_rank = m;
    if (max_rank > m) throw RangeError("rank cutoff exceeds node count");

    Quadrature quad = gauss_legendre(m, k.domain());
    if ((quad.weights.array() <= 0.0).any()) throw NumericalError("non-positive quadrature weight");
    const Eigen::VectorXd sw = quad.weights.cwiseSqrt();
    Eigen::MatrixXd a = k.gram(quad.nodes);
    a = sw.asDiagonal() * a * sw.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw NumericalError("kernel eigen-solve failed");

    // Eigen returns ascending order.
    const Eigen::VectorXd& evals = es.eigenvalues();
    const double lead = evals(m - 1);
    if (!(lead > 0.0)) throw NumericalError("kernel has no positive eigenvalue");
    int r = 0;
    while (r < max_rank && evals(m - 1 - r) > tol * lead) ++r;

    Eigen::VectorXd lambda(r);
    Eigen::MatrixXd psi(m, r);
    for (int i = 0; i < r; ++i) {
        lambda(i) = evals(m - 1 - i);
        Eigen::VectorXd u = es.eigenvectors().col(m - 1 - i);
        Eigen::VectorXd v = u.cwiseQuotient(sw);
        // Deterministic sign: positive weighted mean, else positive first entry
        // of largest magnitude.
        const double mean = quad.weights.dot(v);
        double sign = 1.0;
        if (std::abs(mean) > 1e-10 * v.cwiseAbs().maxCoeff()) {
            sign = mean > 0.0 ? 1.0 : -1.0;
        } else {
            Eigen::Index idx = 0;
            v.cwiseAbs().maxCoeff(&idx);
            sign = v(idx) > 0.0 ? 1.0 : -1.0;
        }
        psi.col(i) = sign * v;
    }
    return SpectralBasis(k, std::move(quad), std::move(lambda), std::move(psi));
}

double mercer_reconstruct(const SpectralBasis& b, double x, double x2, int n) {
    if (n < 0 || n > b.rank()) {
        std::ostringstream os;
        os << "truncation " << n << " exceeds basis rank " << b.rank();
        throw RangeError(os.str());
    }
    if (n == 0) return 0.0;
    const Eigen::VectorXd a = b.eigenfunctions(x);
    const Eigen::VectorXd c = b.eigenfunctions(x2);
    return (b.eigenvalues().head(n).array() * a.head(n).array() * c.head(n).array()).sum();
}

ProductBasis::ProductBasis(SpectralBasis basis_x, SpectralBasis basis_y, int truncation)
    : basis_x_(std::move(basis_x)), basis_y_(std::move(basis_y)), truncation_(truncation) {
    if (truncation_ < 1) throw RangeError("truncation must be at least 1");
    if (truncation_ > std::max(basis_x_.rank(), basis_y_.rank())) {
        std::ostringstream os;
        os << "truncation " << truncation_ << " exceeds both basis ranks (" << basis_x_.rank()
           << ", " << basis_y_.rank() << ")";
        throw RangeError(os.str());
    }
}

double ProductBasis::truncated_covariance(const Point& p, const Point& q) const {
    const double kx = basis_x_.features(p(0), truncation_).dot(basis_x_.features(q(0), truncation_));
    const double ky = basis_y_.features(p(1), truncation_).dot(basis_y_.features(q(1), truncation_));
    return kx * ky;
}

SeparableKernel ProductBasis::kernel() const {
    return SeparableKernel({basis_x_.kernel(), basis_y_.kernel()});
}

std::vector<ProductEigenpair> product_spectrum(const Eigen::VectorXd& lambda,
                                               const Eigen::VectorXd& gamma) {
    std::vector<ProductEigenpair> out;
    out.reserve(static_cast<std::size_t>(lambda.size() * gamma.size()));
    for (int i = 0; i < lambda.size(); ++i) {
        for (int j = 0; j < gamma.size(); ++j) out.push_back({lambda(i) * gamma(j), i, j});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.value > b.value; });
    return out;
}

std::vector<ProductEigenpair> product_eigenpairs(const ProductBasis& pb) {
    const int nx = std::min(pb.truncation(), pb.basis_x().rank());
    const int ny = std::min(pb.truncation(), pb.basis_y().rank());
    return product_spectrum(pb.basis_x().eigenvalues().head(nx), pb.basis_y().eigenvalues().head(ny));
}

KLField::KLField(std::shared_ptr<const ProductBasis> basis, Eigen::MatrixXd coefficients)
    : basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
    const int n = basis_->truncation();
    if (coefficients_.rows() != n || coefficients_.cols() != n) {
        throw ShapeError("KL coefficient matrix must be n x n");
    }
}

double KLField::operator()(double x, double y) const {
    const int n = basis_->truncation();
    return basis_->basis_x().features(x, n).dot(coefficients_ * basis_->basis_y().features(y, n));
}

Eigen::MatrixXd KLField::grid(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const {
    const int n = basis_->truncation();
    return basis_->basis_x().feature_matrix(xs, n) * coefficients_ *
           basis_->basis_y().feature_matrix(ys, n).transpose();
}

std::vector<KLField> kl_sample(std::shared_ptr<const ProductBasis> pb, std::uint64_t seed,
                               int count, CoefficientLaw law) {
    const int n = pb->truncation();
    std::vector<Eigen::MatrixXd> coeffs(static_cast<std::size_t>(count));
    parallel_for(coeffs.size(), [&](std::size_t r) {
        Rng rng = make_stream(seed, r, stream_tag("kl"));
        Eigen::MatrixXd z(n, n);
        // Column-major fill order is part of the determinism contract.
        for (Eigen::Index c = 0; c < n; ++c) {
            for (Eigen::Index a = 0; a < n; ++a) z(a, c) = draw(law, rng);
        }
        coeffs[r] = std::move(z);
    });
    std::vector<KLField> out;
    out.reserve(coeffs.size());
    for (auto& z : coeffs) out.emplace_back(pb, std::move(z));
    return out;
}

Eigen::MatrixXd kl_project(const Eigen::MatrixXd& grid_values, const ProductBasis& pb) {
    const auto& bx = pb.basis_x();
    const auto& by = pb.basis_y();
    if (grid_values.rows() != bx.node_count() || grid_values.cols() != by.node_count()) {
        std::ostringstream os;
        os << "field grid is " << grid_values.rows() << " x " << grid_values.cols()
           << ", quadrature grid is " << bx.node_count() << " x " << by.node_count();
        throw ShapeError(os.str());
    }
    const int n = pb.truncation();
    const int nx = std::min(n, bx.rank());
    const int ny = std::min(n, by.rank());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd left = bx.node_values().leftCols(nx).transpose() * bx.weights().asDiagonal();
    const Eigen::MatrixXd right = by.weights().asDiagonal() * by.node_values().leftCols(ny);
    out.topLeftCorner(nx, ny) = left * grid_values * right;
    return out;
}

}  // namespace sepcov
