#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "sepcov/kernel.hpp"
#include "sepcov/random.hpp"

namespace sepcov {

/// Gauss-Legendre nodes and weights on an interval.
struct Quadrature {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

[[nodiscard]] Quadrature gauss_legendre(int m, const Interval& domain);

inline constexpr int kDefaultNodes = 64;
inline constexpr double kEigenCutoff = 1e-12;

/// Numerical Mercer eigenpairs of a one-dimensional kernel.
///
/// Eigenvalues are descending and strictly positive. Eigenfunctions are
/// orthonormal under the quadrature rule and are extended off the nodes by
/// the Nystrom formula psi_i(x) = sum_k w_k k(x, t_k) psi_i(t_k) / lambda_i.
class SpectralBasis {
public:
    SpectralBasis(Kernel1D kernel, Quadrature quad, Eigen::VectorXd eigenvalues,
                  Eigen::MatrixXd node_values);

    [[nodiscard]] const Kernel1D& kernel() const { return kernel_; }
    [[nodiscard]] const Eigen::VectorXd& nodes() const { return quad_.nodes; }
    [[nodiscard]] const Eigen::VectorXd& weights() const { return quad_.weights; }
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    /// m x r matrix, column i holds psi_i at the nodes.
    [[nodiscard]] const Eigen::MatrixXd& node_values() const { return node_values_; }
    [[nodiscard]] int rank() const { return static_cast<int>(eigenvalues_.size()); }
    [[nodiscard]] int node_count() const { return static_cast<int>(quad_.nodes.size()); }

    /// All r eigenfunctions at x.
    [[nodiscard]] Eigen::VectorXd eigenfunctions(double x) const;
    /// sqrt(lambda_i) psi_i(x), the first `n` of them, zero-padded past rank.
    [[nodiscard]] Eigen::VectorXd features(double x, int n) const;
    /// Rows are features(xs(k), n).
    [[nodiscard]] Eigen::MatrixXd feature_matrix(const Eigen::VectorXd& xs, int n) const;

    /// Quadrature of k(x,x) over the domain.
    [[nodiscard]] double trace_integral() const;

private:
    Kernel1D kernel_;
    Quadrature quad_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd node_values_;
};

/// Eigen-solve of W^{1/2} K W^{1/2} on m Gauss-Legendre nodes, keeping at
/// most `max_rank` pairs with lambda_i > tol * lambda_1.
[[nodiscard]] SpectralBasis nystrom_decompose(const Kernel1D& k, int m = kDefaultNodes,
                                              int max_rank = -1, double tol = kEigenCutoff);

/// Partial Mercer sum over the leading n eigenpairs.
[[nodiscard]] double mercer_reconstruct(const SpectralBasis& b, double x, double x2, int n);

/// Two one-dimensional bases with a common truncation. The shorter spectrum
/// is padded with zero functions up to the truncation.
class ProductBasis {
public:
    ProductBasis(SpectralBasis basis_x, SpectralBasis basis_y, int truncation);

    [[nodiscard]] const SpectralBasis& basis_x() const { return basis_x_; }
    [[nodiscard]] const SpectralBasis& basis_y() const { return basis_y_; }
    [[nodiscard]] int truncation() const { return truncation_; }

    /// Truncated product kernel sum_i g_i(x)g_i(x2) * sum_j h_j(y)h_j(y2).
    [[nodiscard]] double truncated_covariance(const Point& p, const Point& q) const;
    [[nodiscard]] SeparableKernel kernel() const;

private:
    SpectralBasis basis_x_;
    SpectralBasis basis_y_;
    int truncation_;
};

struct ProductEigenpair {
    double value;
    int i;  ///< index into basis_x
    int j;  ///< index into basis_y
};

/// Products lambda_i * gamma_j of two spectra, sorted descending.
[[nodiscard]] std::vector<ProductEigenpair> product_spectrum(const Eigen::VectorXd& lambda,
                                                             const Eigen::VectorXd& gamma);

/// Eigenpairs of the product kernel within the truncation. Zero-padded
/// functions are not eigenfunctions and are left out, so the count is n^2
/// when both ranks reach the truncation.
[[nodiscard]] std::vector<ProductEigenpair> product_eigenpairs(const ProductBasis& pb);

/// A realization sum_ij Z_ij g_i(x) h_j(y) with standardized coefficients.
class KLField {
public:
    KLField(std::shared_ptr<const ProductBasis> basis, Eigen::MatrixXd coefficients);

    [[nodiscard]] double operator()(double x, double y) const;
    [[nodiscard]] double operator()(const Point& p) const { return (*this)(p(0), p(1)); }
    /// Values on the tensor grid xs x ys, entry (a, b) at (xs(a), ys(b)).
    [[nodiscard]] Eigen::MatrixXd grid(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const;

    [[nodiscard]] const Eigen::MatrixXd& coefficients() const { return coefficients_; }
    [[nodiscard]] const ProductBasis& basis() const { return *basis_; }

private:
    std::shared_ptr<const ProductBasis> basis_;
    Eigen::MatrixXd coefficients_;
};

/// `count` independent fields; replicate r draws from make_stream(seed, r).
[[nodiscard]] std::vector<KLField> kl_sample(std::shared_ptr<const ProductBasis> pb,
                                             std::uint64_t seed, int count,
                                             CoefficientLaw law = CoefficientLaw::Gaussian);

/// Quadrature of F(x,y) psi_i(x) phi_j(y) over the domain, from values on
/// the tensor grid of quadrature nodes. Returns the n x n matrix Z'_ij.
[[nodiscard]] Eigen::MatrixXd kl_project(const Eigen::MatrixXd& grid_values,
                                         const ProductBasis& pb);

}  // namespace sepcov
