#include "sepcov/emulator.hpp"

#include <cmath>
#include <sstream>

namespace sepcov {

Regressor Regressor::constant() {
    return {"const", [](const Point&) { return 1.0; }};
}

Regressor Regressor::linear(std::size_t d) {
    const auto i = static_cast<Eigen::Index>(d);
    return {"x" + std::to_string(d + 1), [i](const Point& p) { return p(i); }};
}

Regressor Regressor::interaction(std::size_t d1, std::size_t d2, double c1, double c2) {
    const auto i = static_cast<Eigen::Index>(d1);
    const auto j = static_cast<Eigen::Index>(d2);
    return {"x" + std::to_string(d1 + 1) + "*x" + std::to_string(d2 + 1),
            [i, j, c1, c2](const Point& p) { return (p(i) - c1) * (p(j) - c2); }};
}

RegressionPrior::RegressionPrior(std::vector<Regressor> regressors_, Eigen::VectorXd coef_mean_,
                                 Eigen::MatrixXd coef_cov_)
    : regressors(std::move(regressors_)), coef_mean(std::move(coef_mean_)), coef_cov(std::move(coef_cov_)) {
    const auto q = static_cast<Eigen::Index>(regressors.size());
    if (coef_mean.size() != q || coef_cov.rows() != q || coef_cov.cols() != q) {
        throw ShapeError("regression coefficient mean/covariance must match the regressor count");
    }
    if (q > 0) {
        const double scale = std::max(1.0, coef_cov.cwiseAbs().maxCoeff());
        if ((coef_cov - coef_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw InvalidArgument("regression coefficient covariance must be symmetric");
        }
        if (min_eigenvalue(coef_cov) < -kPsdTolerance * scale) {
            throw InvalidArgument("regression coefficient covariance must be PSD");
        }
    }
}

RegressionPrior RegressionPrior::none() { return {{}, Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)}; }

RegressionPrior RegressionPrior::constant(double mean, double variance) {
    return {{Regressor::constant()}, Eigen::VectorXd::Constant(1, mean),
            Eigen::MatrixXd::Constant(1, 1, variance)};
}

Eigen::VectorXd RegressionPrior::basis(const Point& p) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(regressors.size()));
    for (std::size_t i = 0; i < regressors.size(); ++i) r(static_cast<Eigen::Index>(i)) = regressors[i].fn(p);
    return r;
}

Eigen::MatrixXd RegressionPrior::design_matrix(const PointSet& pts) const {
    Eigen::MatrixXd h(pts.rows(), static_cast<Eigen::Index>(regressors.size()));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) h.row(i) = basis(pts.row(i).transpose()).transpose();
    return h;
}

EmulatorPrior::EmulatorPrior(RegressionPrior regression_, SeparableKernel residual_)
    : regression(std::move(regression_)), residual(std::move(residual_)) {}

double EmulatorPrior::mean(const Point& p) const {
    if (regression.size() == 0) return 0.0;
    return regression.basis(p).dot(regression.coef_mean);
}

double EmulatorPrior::covariance(const Point& p, const Point& q) const {
    double c = residual(p, q);
    if (regression.size() > 0) c += regression.basis(p).dot(regression.coef_cov * regression.basis(q));
    return c;
}

CovarianceFn EmulatorPrior::covariance_fn() const {
    return [self = *this](const Point& p, const Point& q) { return self.covariance(p, q); };
}

RunEnsemble::RunEnsemble(PointSet design_, Eigen::VectorXd values_)
    : design(std::move(design_)), values(std::move(values_)) {
    if (design.rows() != values.size()) throw ShapeError("ensemble needs one value per design point");
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if ((design.row(i) - design.row(j)).cwiseAbs().maxCoeff() <= 1e-12) {
                std::ostringstream os;
                os << "duplicate design points at rows " << j << " and " << i;
                throw InvalidArgument(os.str());
            }
        }
    }
}

EmulatorPosterior::EmulatorPosterior(EmulatorPrior prior, RunEnsemble ensemble, FitOptions options)
    : prior_(std::move(prior)), ensemble_(std::move(ensemble)), options_(options) {}

Eigen::VectorXd EmulatorPosterior::prior_mean(const PointSet& pts) const {
    const auto& reg = prior_.regression;
    if (reg.size() == 0) return Eigen::VectorXd::Zero(pts.rows());
    const Eigen::VectorXd& beta = options_.plug_in_mean ? beta_hat_ : reg.coef_mean;
    return reg.design_matrix(pts) * beta;
}

Eigen::MatrixXd EmulatorPosterior::prior_cov(const PointSet& a, const PointSet& b) const {
    Eigen::MatrixXd c(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const Point pi = a.row(i).transpose();
        for (Eigen::Index j = 0; j < b.rows(); ++j) c(i, j) = prior_.residual(pi, b.row(j).transpose());
    }
    const auto& reg = prior_.regression;
    if (!options_.plug_in_mean && reg.size() > 0) {
        c += reg.design_matrix(a) * reg.coef_cov * reg.design_matrix(b).transpose();
    }
    return c;
}

EmulatorPosterior fit(const EmulatorPrior& prior, const RunEnsemble& ensemble, const FitOptions& options) {
    if (ensemble.design.rows() > 0 && static_cast<std::size_t>(ensemble.design.cols()) != prior.dim()) {
        throw ShapeError("ensemble points do not match the kernel dimension");
    }
    EmulatorPosterior post(prior, ensemble, options);
    const Eigen::Index n = ensemble.size();
    const auto& reg = prior.regression;
    if (options.plug_in_mean) post.beta_hat_ = reg.coef_mean;
    if (n == 0) return post;

    Eigen::MatrixXd c = post.prior_cov(ensemble.design, ensemble.design);
    post.jitter_ = options.noise_jitter * c.diagonal().maxCoeff();
    c.diagonal().array() += post.jitter_;
    post.chol_.compute(c);
    if (post.chol_.info() != Eigen::Success) {
        std::ostringstream os;
        os << "design covariance is not positive definite; worst eigenvalue " << min_eigenvalue(c)
           << " with jitter " << post.jitter_;
        throw NumericalError(os.str());
    }

    if (options.plug_in_mean && reg.size() > 0) {
        const Eigen::MatrixXd h = reg.design_matrix(ensemble.design);
        const Eigen::MatrixXd kinv_h = post.chol_.solve(h);
        const Eigen::MatrixXd normal = h.transpose() * kinv_h;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
        if (ldlt.info() != Eigen::Success || n < static_cast<Eigen::Index>(reg.size()) ||
            ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-14 * ldlt.vectorD().cwiseAbs().maxCoeff()) {
            throw NumericalError("regression coefficients are not estimable from this design");
        }
        post.beta_hat_ = ldlt.solve(kinv_h.transpose() * ensemble.values);
    }
    post.alpha_ = post.chol_.solve(ensemble.values - post.prior_mean(ensemble.design));
    return post;
}

Prediction EmulatorPosterior::predict(const PointSet& pts) const {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) prior_.residual.check_point(pts.row(i).transpose());
    Prediction out;
    out.mean = prior_mean(pts);
    out.covariance = prior_cov(pts, pts);
    if (ensemble_.size() > 0) {
        const Eigen::MatrixXd cross = prior_cov(ensemble_.design, pts);
        out.mean += cross.transpose() * alpha_;
        const Eigen::MatrixXd v = chol_.matrixL().solve(cross);
        out.covariance -= v.transpose() * v;
    }
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    return out;
}

Eigen::VectorXd EmulatorPosterior::mean(const PointSet& pts) const {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) prior_.residual.check_point(pts.row(i).transpose());
    Eigen::VectorXd m = prior_mean(pts);
    if (ensemble_.size() > 0) m += prior_cov(ensemble_.design, pts).transpose() * alpha_;
    return m;
}

Eigen::VectorXd EmulatorPosterior::variance(const PointSet& pts) const {
    Eigen::VectorXd v(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const Point p = pts.row(i).transpose();
        v(i) = covariance(p, p);
    }
    return v;
}

double EmulatorPosterior::covariance(const Point& p, const Point& q) const {
    prior_.residual.check_point(p);
    prior_.residual.check_point(q);
    PointSet a(1, p.size()), b(1, q.size());
    a.row(0) = p.transpose();
    b.row(0) = q.transpose();
    double c = prior_cov(a, b)(0, 0);
    if (ensemble_.size() > 0) {
        const Eigen::VectorXd ca = prior_cov(ensemble_.design, a).col(0);
        const Eigen::VectorXd cb = prior_cov(ensemble_.design, b).col(0);
        c -= ca.dot(chol_.solve(cb));
    }
    return c;
}

Prediction predict(const EmulatorPosterior& post, const PointSet& pts) { return post.predict(pts); }

GridDesign::GridDesign(std::vector<Eigen::VectorXd> axes) : axis_points(std::move(axes)) {
    if (axis_points.empty()) throw InvalidArgument("grid needs at least one axis");
    for (const auto& a : axis_points) {
        if (a.size() == 0) throw InvalidArgument("grid axes must be non-empty");
        for (Eigen::Index i = 1; i < a.size(); ++i) {
            if (!(a(i) > a(i - 1))) throw InvalidArgument("grid axis points must be strictly increasing");
        }
    }
}

GridDesign GridDesign::uniform(const std::vector<Interval>& box, const std::vector<int>& counts) {
    if (box.size() != counts.size()) throw ShapeError("one count per grid axis required");
    std::vector<Eigen::VectorXd> axes;
    for (std::size_t d = 0; d < box.size(); ++d) {
        if (counts[d] < 1) throw InvalidArgument("grid axis counts must be positive");
        if (counts[d] == 1) {
            axes.push_back(Eigen::VectorXd::Constant(1, box[d].center()));
        } else {
            axes.push_back(Eigen::VectorXd::LinSpaced(counts[d], box[d].lo, box[d].hi));
        }
    }
    return GridDesign(std::move(axes));
}

Eigen::Index GridDesign::size() const {
    Eigen::Index n = 1;
    for (const auto& a : axis_points) n *= a.size();
    return n;
}

PointSet GridDesign::points() const {
    const Eigen::Index total = size();
    const auto p = static_cast<Eigen::Index>(axis_points.size());
    PointSet pts(total, p);
    for (Eigen::Index r = 0; r < total; ++r) {
        Eigen::Index rem = r;
        for (Eigen::Index d = p - 1; d >= 0; --d) {
            const auto& axis = axis_points[static_cast<std::size_t>(d)];
            pts(r, d) = axis(rem % axis.size());
            rem /= axis.size();
        }
    }
    return pts;
}

namespace {

// Applies `m` along axis d of a tensor stored with the last axis fastest.
Eigen::VectorXd mode_product(const Eigen::VectorXd& x, const std::vector<Eigen::Index>& dims,
                             std::size_t d, const Eigen::MatrixXd& m) {
    Eigen::Index outer = 1;
    Eigen::Index inner = 1;
    for (std::size_t e = 0; e < d; ++e) outer *= dims[e];
    for (std::size_t e = d + 1; e < dims.size(); ++e) inner *= dims[e];
    const Eigen::Index nd = dims[d];
    Eigen::VectorXd y(x.size());
    for (Eigen::Index o = 0; o < outer; ++o) {
        Eigen::Map<const Eigen::MatrixXd> xb(x.data() + o * nd * inner, inner, nd);
        Eigen::Map<Eigen::MatrixXd> yb(y.data() + o * nd * inner, inner, nd);
        yb.noalias() = xb * m.transpose();
    }
    return y;
}

}  // namespace

KroneckerSolver::KroneckerSolver(const GridDesign& grid, const SeparableKernel& kernel, double axis_jitter) {
    if (grid.dim() != kernel.dim()) throw ShapeError("grid and kernel dimensions differ");
    Eigen::VectorXd evals = Eigen::VectorXd::Ones(1);
    for (std::size_t d = 0; d < grid.dim(); ++d) {
        Eigen::MatrixXd g = kernel.factor(d).gram(grid.axis_points[d]);
        if (axis_jitter > 0.0) g.diagonal().array() += axis_jitter * g.diagonal().maxCoeff();
        grams_.push_back(g);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        if (es.info() != Eigen::Success) throw NumericalError("axis Gram eigen-solve failed");
        const double lmin = es.eigenvalues().minCoeff();
        const double lmax = es.eigenvalues().maxCoeff();
        if (!(lmin > 1e-14 * lmax)) {
            std::ostringstream os;
            os << "axis " << d << " Gram is singular (eigenvalues " << lmin << " .. " << lmax << ")";
            throw NumericalError(os.str());
        }
        dims_.push_back(g.rows());
        vectors_.push_back(es.eigenvectors());
        // Kronecker of eigenvalue vectors in the same (last fastest) order.
        Eigen::VectorXd next(evals.size() * g.rows());
        for (Eigen::Index a = 0; a < evals.size(); ++a) {
            next.segment(a * g.rows(), g.rows()) = evals(a) * es.eigenvalues();
        }
        evals = std::move(next);
    }
    inv_eigen_products_ = evals.cwiseInverse();
}

Eigen::VectorXd KroneckerSolver::solve(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != inv_eigen_products_.size()) throw ShapeError("right-hand side does not match grid size");
    Eigen::VectorXd z = rhs;
    for (std::size_t d = 0; d < dims_.size(); ++d) z = mode_product(z, dims_, d, vectors_[d].transpose());
    z.array() *= inv_eigen_products_.array();
    for (std::size_t d = 0; d < dims_.size(); ++d) z = mode_product(z, dims_, d, vectors_[d]);
    return z;
}

Eigen::VectorXd KroneckerSolver::multiply(const Eigen::VectorXd& v) const {
    if (v.size() != inv_eigen_products_.size()) throw ShapeError("vector does not match grid size");
    Eigen::VectorXd z = v;
    for (std::size_t d = 0; d < dims_.size(); ++d) z = mode_product(z, dims_, d, grams_[d]);
    return z;
}

Eigen::VectorXd kron_solve(const GridDesign& grid, const SeparableKernel& kernel,
                           const Eigen::VectorXd& rhs, double axis_jitter) {
    return KroneckerSolver(grid, kernel, axis_jitter).solve(rhs);
}

double separability_residual(const Eigen::MatrixXd& cov, Eigen::Index m, Eigen::Index n) {
    if (m < 1 || n < 1 || cov.rows() != m * n || cov.cols() != m * n) {
        std::ostringstream os;
        os << "separability_residual expects a " << m * n << " x " << m * n << " matrix, got "
           << cov.rows() << " x " << cov.cols();
        throw ShapeError(os.str());
    }
    Eigen::MatrixXd r(m * m, n * n);
    for (Eigen::Index i2 = 0; i2 < m; ++i2) {
        for (Eigen::Index i1 = 0; i1 < m; ++i1) {
            const Eigen::MatrixXd block = cov.block(i1 * n, i2 * n, n, n);
            r.row(i1 + i2 * m) = Eigen::Map<const Eigen::RowVectorXd>(block.data(), n * n);
        }
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r);
    const Eigen::VectorXd s2 = svd.singularValues().array().square();
    const double total = s2.sum();
    if (total == 0.0) return 0.0;
    return s2.tail(s2.size() - 1).sum() / total;
}

}  // namespace sepcov
