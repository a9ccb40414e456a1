#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sepcov/spectral.hpp"

namespace sepcov {

/// Joint draws of a family of random quantities, one draw per row.
struct SampleFamily {
    std::vector<std::string> labels;
    Eigen::MatrixXd draws;

    SampleFamily(std::vector<std::string> labels, Eigen::MatrixXd draws);
    /// Single quantity with a default label.
    static SampleFamily single(std::string label, const Eigen::VectorXd& draws);

    [[nodiscard]] Eigen::Index size() const { return draws.rows(); }
    [[nodiscard]] Eigen::Index quantities() const { return draws.cols(); }
};

struct MonomialTest {
    std::vector<int> a;  ///< exponents on the X family
    std::vector<int> b;  ///< exponents on the Y family
    double violation = 0.0;      ///< E(X^a Y^b) - E(X^a) E(Y^b), empirical
    double standard_error = 0.0; ///< jackknife
    double standardized = 0.0;   ///< |violation| / standard_error

    /// max(sum a, sum b): the smallest order whose definition includes it.
    [[nodiscard]] int order() const;
};

struct UncorrelationReport {
    int order_tested = 0;
    double tolerance = 0.0;
    double worst_violation = 0.0;  ///< largest standardized violation
    std::vector<int> monomial_a;
    std::vector<int> monomial_b;
    std::vector<bool> pass_by_order;  ///< entry j-1 covers orders <= j
    bool pass = true;
    std::vector<MonomialTest> monomials;  ///< in enumeration order

    /// The test for a particular exponent pair, or nullptr.
    [[nodiscard]] const MonomialTest* find(const std::vector<int>& a, const std::vector<int>& b) const;
};

inline constexpr double kDefaultUncorrelationTolerance = 5.0;
inline constexpr std::size_t kDefaultMonomialBudget = 100000;

/// Number of mixed monomials (sum a in [1,k], sum b in [1,k]).
[[nodiscard]] double mixed_monomial_count(Eigen::Index nx, Eigen::Index ny, int k);

/// Empirical k-th order uncorrelation test between two jointly drawn families.
///
/// A monomial pair (a, b) is included when 1 <= sum(a) <= k and
/// 1 <= sum(b) <= k. Pairs are enumerated in graded lexicographic order and
/// each factorization defect is standardized by its jackknife standard error.
[[nodiscard]] UncorrelationReport check_uncorrelated(
    const SampleFamily& x, const SampleFamily& y, int k,
    double tol = kDefaultUncorrelationTolerance,
    std::size_t budget = kDefaultMonomialBudget);

/// (sum_i Z_i g_i(x)) * (sum_j Z'_j h_j(y)).
class ProductField {
public:
    ProductField(std::shared_ptr<const ProductBasis> basis, Eigen::VectorXd coeffs_x,
                 Eigen::VectorXd coeffs_y);

    [[nodiscard]] double operator()(double x, double y) const;
    [[nodiscard]] double operator()(const Point& p) const { return (*this)(p(0), p(1)); }
    [[nodiscard]] Eigen::MatrixXd grid(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const;

    [[nodiscard]] double factor_x(double x) const;
    [[nodiscard]] double factor_y(double y) const;

    [[nodiscard]] const Eigen::VectorXd& coeffs_x() const { return coeffs_x_; }
    [[nodiscard]] const Eigen::VectorXd& coeffs_y() const { return coeffs_y_; }
    [[nodiscard]] const ProductBasis& basis() const { return *basis_; }

private:
    std::shared_ptr<const ProductBasis> basis_;
    Eigen::VectorXd coeffs_x_;
    Eigen::VectorXd coeffs_y_;
};

/// Fields whose two coefficient families are drawn independently of each
/// other, each i.i.d. from its law.
[[nodiscard]] std::vector<ProductField> product_sample(
    std::shared_ptr<const ProductBasis> pb, std::uint64_t seed, int count,
    CoefficientLaw law_x = CoefficientLaw::Gaussian,
    CoefficientLaw law_y = CoefficientLaw::Gaussian);

/// Theoretical covariance of the product process, summed term by term:
/// sum_i sum_j g_i(x) g_i(x2) h_j(y) h_j(y2).
[[nodiscard]] double product_process_covariance(const ProductBasis& pb, const Point& p,
                                                const Point& q);

struct DistributionSummary {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  ///< not excess; 3 for a Gaussian
    std::size_t count = 0;
};

inline constexpr std::size_t kMinDiagnosticSamples = 1000;

[[nodiscard]] DistributionSummary distribution_diagnostics(const Eigen::VectorXd& values);

template <typename Field>
[[nodiscard]] DistributionSummary distribution_diagnostics(const std::vector<Field>& fields,
                                                           const Point& probe) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) v(static_cast<Eigen::Index>(i)) = fields[i](probe);
    return distribution_diagnostics(v);
}

struct ProbePair {
    Point p;
    Point q;
};

struct CovarianceComparison {
    ProbePair pair;
    double exact = 0.0;
    double theoretical_kl = 0.0;
    double theoretical_product = 0.0;
    double empirical_kl = 0.0;
    double se_kl = 0.0;
    double empirical_product = 0.0;
    double se_product = 0.0;
    bool kl_matches_product = false;
    bool kl_matches_exact = false;
    bool product_matches_exact = false;
};

struct SecondOrderReport {
    std::vector<CovarianceComparison> pairs;
    double band = 0.0;  ///< standard-error multiple
    int samples = 0;
    bool pass = false;
};

/// Empirical covariance of the KL sampler against the product sampler at
/// each probe pair, with both compared to the exact kernel.
/// `product_truncation` < 0 uses the truncation of `pb` for both samplers.
[[nodiscard]] SecondOrderReport second_order_identical_check(
    std::shared_ptr<const ProductBasis> pb, int n_samples, const std::vector<ProbePair>& probes,
    std::uint64_t seed, int product_truncation = -1, double band = 5.0);

/// Six fixed probe pairs inside the domain of `pb`.
[[nodiscard]] std::vector<ProbePair> default_probe_pairs(const ProductBasis& pb);

}  // namespace sepcov
