#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sepcov/kernel.hpp"

namespace sepcov {

/// Named basis function r_i(point) of the regression part of the prior.
struct Regressor {
    std::string name;
    std::function<double(const Point&)> fn;

    static Regressor constant();
    /// The coordinate `d` itself.
    static Regressor linear(std::size_t d);
    /// (x_d1 - c1) * (x_d2 - c2).
    static Regressor interaction(std::size_t d1, std::size_t d2, double c1 = 0.0, double c2 = 0.0);
};

/// sum_i beta_i r_i(point), with beta ~ (coef_mean, coef_cov).
struct RegressionPrior {
    std::vector<Regressor> regressors;
    Eigen::VectorXd coef_mean;
    Eigen::MatrixXd coef_cov;

    RegressionPrior() = default;
    RegressionPrior(std::vector<Regressor> regressors, Eigen::VectorXd coef_mean,
                    Eigen::MatrixXd coef_cov);

    [[nodiscard]] static RegressionPrior none();
    /// Constant regressor with the given mean and variance on beta_0.
    [[nodiscard]] static RegressionPrior constant(double mean = 0.0, double variance = 0.0);

    [[nodiscard]] std::size_t size() const { return regressors.size(); }
    [[nodiscard]] Eigen::VectorXd basis(const Point& p) const;
    /// One row of regressor values per point.
    [[nodiscard]] Eigen::MatrixXd design_matrix(const PointSet& pts) const;
};

/// F = sum_i beta_i r_i + E with E a zero-mean process with separable covariance.
struct EmulatorPrior {
    RegressionPrior regression;
    SeparableKernel residual;

    EmulatorPrior(RegressionPrior regression, SeparableKernel residual);

    [[nodiscard]] double mean(const Point& p) const;
    [[nodiscard]] double covariance(const Point& p, const Point& q) const;
    [[nodiscard]] CovarianceFn covariance_fn() const;
    [[nodiscard]] std::size_t dim() const { return residual.dim(); }
};

/// Observed runs of the deterministic function.
struct RunEnsemble {
    PointSet design;
    Eigen::VectorXd values;

    RunEnsemble() = default;
    /// Rejects length mismatches and points closer than 1e-12 in every coordinate.
    RunEnsemble(PointSet design, Eigen::VectorXd values);

    [[nodiscard]] Eigen::Index size() const { return values.size(); }
};

struct FitOptions {
    /// Diagonal jitter relative to the largest prior variance at the design.
    double noise_jitter = 1e-10;
    /// Replace the regression prior by its generalized least squares estimate
    /// and condition the residual only; the resulting covariance is separable.
    bool plug_in_mean = false;
};

struct Prediction {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

class EmulatorPosterior {
public:
    [[nodiscard]] const EmulatorPrior& prior() const { return prior_; }
    [[nodiscard]] const RunEnsemble& ensemble() const { return ensemble_; }
    [[nodiscard]] const FitOptions& options() const { return options_; }
    [[nodiscard]] double jitter() const { return jitter_; }
    /// Plug-in regression coefficients; empty unless plug_in_mean was set.
    [[nodiscard]] const Eigen::VectorXd& plug_in_coefficients() const { return beta_hat_; }

    [[nodiscard]] Prediction predict(const PointSet& pts) const;
    [[nodiscard]] Eigen::VectorXd mean(const PointSet& pts) const;
    [[nodiscard]] Eigen::VectorXd variance(const PointSet& pts) const;
    /// Posterior covariance between two single points.
    [[nodiscard]] double covariance(const Point& p, const Point& q) const;

private:
    friend EmulatorPosterior fit(const EmulatorPrior&, const RunEnsemble&, const FitOptions&);
    EmulatorPosterior(EmulatorPrior prior, RunEnsemble ensemble, FitOptions options);

    [[nodiscard]] Eigen::VectorXd prior_mean(const PointSet& pts) const;
    [[nodiscard]] Eigen::MatrixXd prior_cov(const PointSet& a, const PointSet& b) const;

    EmulatorPrior prior_;
    RunEnsemble ensemble_;
    FitOptions options_;
    double jitter_ = 0.0;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd beta_hat_;
};

/// Joint-Gaussian conditioning of the prior on the runs, with the regression
/// coefficients marginalized analytically. Throws NumericalError when the
/// design covariance cannot be factorized.
[[nodiscard]] EmulatorPosterior fit(const EmulatorPrior& prior, const RunEnsemble& ensemble,
                                    const FitOptions& options = {});

[[nodiscard]] Prediction predict(const EmulatorPosterior& post, const PointSet& pts);

/// Tensor grid; points are enumerated with the last axis varying fastest,
/// which makes the Gram matrix K_0 (x) K_1 (x) ... for a separable kernel.
struct GridDesign {
    std::vector<Eigen::VectorXd> axis_points;

    explicit GridDesign(std::vector<Eigen::VectorXd> axes);
    static GridDesign uniform(const std::vector<Interval>& box, const std::vector<int>& counts);

    [[nodiscard]] std::size_t dim() const { return axis_points.size(); }
    [[nodiscard]] Eigen::Index size() const;
    [[nodiscard]] PointSet points() const;
};

/// Solver for (K_0 (x) ... (x) K_{p-1}) z = b through per-axis symmetric
/// eigendecompositions. Factors are reused across right-hand sides.
class KroneckerSolver {
public:
    /// `axis_jitter` is added to each axis Gram diagonal, relative to its maximum.
    KroneckerSolver(const GridDesign& grid, const SeparableKernel& kernel, double axis_jitter = 0.0);

    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    [[nodiscard]] Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
    [[nodiscard]] const std::vector<Eigen::MatrixXd>& axis_grams() const { return grams_; }

private:
    std::vector<Eigen::Index> dims_;
    std::vector<Eigen::MatrixXd> grams_;
    std::vector<Eigen::MatrixXd> vectors_;
    Eigen::VectorXd inv_eigen_products_;
};

[[nodiscard]] Eigen::VectorXd kron_solve(const GridDesign& grid, const SeparableKernel& kernel,
                                         const Eigen::VectorXd& rhs, double axis_jitter = 0.0);

/// 1 - sigma_1^2 / sum sigma_k^2 for the singular values of the
/// rearrangement that maps A (x) B to vec(A) vec(B)^T. Zero exactly when
/// `cov` (of size mn x mn) is a Kronecker product of an m x m and an n x n matrix.
[[nodiscard]] double separability_residual(const Eigen::MatrixXd& cov, Eigen::Index m, Eigen::Index n);

}  // namespace sepcov
