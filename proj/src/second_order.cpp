#include "sepcov/second_order.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sepcov/parallel.hpp"

namespace sepcov {

SampleFamily::SampleFamily(std::vector<std::string> labels_, Eigen::MatrixXd draws_)
    : labels(std::move(labels_)), draws(std::move(draws_)) {
    if (static_cast<Eigen::Index>(labels.size()) != draws.cols()) {
        throw ShapeError("one label per sampled quantity required");
    }
    if (draws.rows() < 2) throw SampleSizeError("a sample family needs at least two draws");
    if (!draws.allFinite()) throw InvalidArgument("sample family contains non-finite draws");
}

SampleFamily SampleFamily::single(std::string label, const Eigen::VectorXd& values) {
    return SampleFamily({std::move(label)}, values);
}

int MonomialTest::order() const {
    return std::max(std::accumulate(a.begin(), a.end(), 0), std::accumulate(b.begin(), b.end(), 0));
}

const MonomialTest* UncorrelationReport::find(const std::vector<int>& a,
                                              const std::vector<int>& b) const {
    for (const auto& m : monomials) {
        if (m.a == a && m.b == b) return &m;
    }
    return nullptr;
}

namespace {

double binomial(double n, double k) {
    double r = 1.0;
    for (double i = 1.0; i <= k; i += 1.0) r = r * (n - k + i) / i;
    return r;
}

// Exponent vectors of `vars` variables with total degree `degree`, in
// lexicographic order with larger leading exponents first.
void compositions(int vars, int degree, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    const auto pos = cur.size();
    if (static_cast<int>(pos) == vars - 1) {
        cur.push_back(degree);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int e = degree; e >= 0; --e) {
        cur.push_back(e);
        compositions(vars, degree - e, cur, out);
        cur.pop_back();
    }
}

std::vector<std::vector<int>> graded_exponents(int vars, int max_degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    for (int d = 1; d <= max_degree; ++d) compositions(vars, d, cur, out);
    return out;
}

Eigen::VectorXd monomial_values(const Eigen::MatrixXd& draws, const std::vector<int>& exps) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(draws.rows());
    for (std::size_t c = 0; c < exps.size(); ++c) {
        for (int e = 0; e < exps[c]; ++e) v.array() *= draws.col(static_cast<Eigen::Index>(c)).array();
    }
    return v;
}

void jackknife_defect(const Eigen::VectorXd& u, const Eigen::VectorXd& v, MonomialTest& t) {
    const double n = static_cast<double>(u.size());
    const double suv = u.dot(v);
    const double su = u.sum();
    const double sv = v.sum();
    t.violation = suv / n - (su / n) * (sv / n);

    const Eigen::ArrayXd loo = (suv - u.array() * v.array()) / (n - 1.0) -
                               (su - u.array()) * (sv - v.array()) / ((n - 1.0) * (n - 1.0));
    const double mean = loo.mean();
    const double var = (n - 1.0) / n * (loo - mean).square().sum();
    t.standard_error = std::sqrt(var);
    if (t.standard_error > 0.0) {
        t.standardized = std::abs(t.violation) / t.standard_error;
    } else {
        t.standardized = t.violation == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
}

}  // namespace

double mixed_monomial_count(Eigen::Index nx, Eigen::Index ny, int k) {
    double cx = 0.0;
    double cy = 0.0;
    for (int s = 1; s <= k; ++s) {
        cx += binomial(static_cast<double>(s + nx - 1), static_cast<double>(nx - 1));
        cy += binomial(static_cast<double>(s + ny - 1), static_cast<double>(ny - 1));
    }
    return cx * cy;
}

UncorrelationReport check_uncorrelated(const SampleFamily& x, const SampleFamily& y, int k,
                                       double tol, std::size_t budget) {
    if (k < 1) throw InvalidArgument("uncorrelation order must be at least 1");
    if (x.size() != y.size()) throw ShapeError("families must be jointly sampled (equal draws)");
    const double count = mixed_monomial_count(x.quantities(), y.quantities(), k);
    if (count > static_cast<double>(budget)) {
        std::ostringstream os;
        os << "order " << k << " needs " << count << " monomials, budget is " << budget;
        throw BudgetError(os.str());
    }

    const auto ax = graded_exponents(static_cast<int>(x.quantities()), k);
    const auto by = graded_exponents(static_cast<int>(y.quantities()), k);

    UncorrelationReport rep;
    rep.order_tested = k;
    rep.tolerance = tol;
    rep.monomials.reserve(ax.size() * by.size());
    for (const auto& a : ax) {
        for (const auto& b : by) rep.monomials.push_back({a, b});
    }
    auto total = [](const MonomialTest& m) {
        return std::accumulate(m.a.begin(), m.a.end(), 0) + std::accumulate(m.b.begin(), m.b.end(), 0);
    };
    std::stable_sort(rep.monomials.begin(), rep.monomials.end(),
                     [&](const MonomialTest& l, const MonomialTest& r) {
                         if (l.order() != r.order()) return l.order() < r.order();
                         return total(l) < total(r);
                     });

    std::vector<Eigen::VectorXd> xu(ax.size()), yv(by.size());
    parallel_for(ax.size(), [&](std::size_t i) { xu[i] = monomial_values(x.draws, ax[i]); });
    parallel_for(by.size(), [&](std::size_t j) { yv[j] = monomial_values(y.draws, by[j]); });
    auto index_of = [](const std::vector<std::vector<int>>& list, const std::vector<int>& e) {
        return static_cast<std::size_t>(std::find(list.begin(), list.end(), e) - list.begin());
    };
    parallel_for(rep.monomials.size(), [&](std::size_t m) {
        auto& t = rep.monomials[m];
        jackknife_defect(xu[index_of(ax, t.a)], yv[index_of(by, t.b)], t);
    });

    rep.pass_by_order.assign(static_cast<std::size_t>(k), true);
    rep.worst_violation = 0.0;
    for (const auto& t : rep.monomials) {
        if (t.standardized > tol) {
            for (int j = t.order(); j <= k; ++j) rep.pass_by_order[static_cast<std::size_t>(j - 1)] = false;
        }
        if (rep.monomial_a.empty() || t.standardized > rep.worst_violation) {
            rep.worst_violation = t.standardized;
            rep.monomial_a = t.a;
            rep.monomial_b = t.b;
        }
    }
    rep.pass = rep.pass_by_order.back();
    return rep;
}

ProductField::ProductField(std::shared_ptr<const ProductBasis> basis, Eigen::VectorXd coeffs_x,
                           Eigen::VectorXd coeffs_y)
    : basis_(std::move(basis)), coeffs_x_(std::move(coeffs_x)), coeffs_y_(std::move(coeffs_y)) {
    const int n = basis_->truncation();
    if (coeffs_x_.size() != n || coeffs_y_.size() != n) {
        throw ShapeError("product-field coefficient vectors must have the truncation length");
    }
}

double ProductField::factor_x(double x) const {
    return basis_->basis_x().features(x, basis_->truncation()).dot(coeffs_x_);
}

double ProductField::factor_y(double y) const {
    return basis_->basis_y().features(y, basis_->truncation()).dot(coeffs_y_);
}

double ProductField::operator()(double x, double y) const { return factor_x(x) * factor_y(y); }

Eigen::MatrixXd ProductField::grid(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const {
    const int n = basis_->truncation();
    const Eigen::VectorXd fx = basis_->basis_x().feature_matrix(xs, n) * coeffs_x_;
    const Eigen::VectorXd fy = basis_->basis_y().feature_matrix(ys, n) * coeffs_y_;
    return fx * fy.transpose();
}

std::vector<ProductField> product_sample(std::shared_ptr<const ProductBasis> pb,
                                         std::uint64_t seed, int count, CoefficientLaw law_x,
                                         CoefficientLaw law_y) {
    const int n = pb->truncation();
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> coeffs(static_cast<std::size_t>(count));
    parallel_for(coeffs.size(), [&](std::size_t r) {
        // Separate streams keep the two families independent.
        Rng rx = make_stream(seed, r, stream_tag("product-x"));
        Rng ry = make_stream(seed, r, stream_tag("product-y"));
        Eigen::VectorXd zx(n), zy(n);
        for (int i = 0; i < n; ++i) zx(i) = draw(law_x, rx);
        for (int j = 0; j < n; ++j) zy(j) = draw(law_y, ry);
        coeffs[r] = {std::move(zx), std::move(zy)};
    });
    std::vector<ProductField> out;
    out.reserve(coeffs.size());
    for (auto& [zx, zy] : coeffs) out.emplace_back(pb, std::move(zx), std::move(zy));
    return out;
}

double product_process_covariance(const ProductBasis& pb, const Point& p, const Point& q) {
    const int n = pb.truncation();
    const Eigen::VectorXd gp = pb.basis_x().features(p(0), n);
    const Eigen::VectorXd gq = pb.basis_x().features(q(0), n);
    const Eigen::VectorXd hp = pb.basis_y().features(p(1), n);
    const Eigen::VectorXd hq = pb.basis_y().features(q(1), n);
    // E(Z_i Z_i' Z'_j Z'_j') = delta_ii' delta_jj' leaves the diagonal terms.
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) s += gp(i) * gq(i) * hp(j) * hq(j);
    }
    return s;
}

DistributionSummary distribution_diagnostics(const Eigen::VectorXd& values) {
    if (static_cast<std::size_t>(values.size()) < kMinDiagnosticSamples) {
        std::ostringstream os;
        os << "distribution diagnostics need at least " << kMinDiagnosticSamples
           << " samples, got " << values.size();
        throw SampleSizeError(os.str());
    }
    DistributionSummary s;
    s.count = static_cast<std::size_t>(values.size());
    s.mean = values.mean();
    const Eigen::ArrayXd c = values.array() - s.mean;
    const double m2 = c.square().mean();
    const double m3 = c.cube().mean();
    const double m4 = c.square().square().mean();
    s.variance = m2;
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2);
    }
    return s;
}

namespace {

struct MomentEstimate {
    double mean;
    double se;
};

MomentEstimate product_moment(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd prod = a.array() * b.array();
    const double n = static_cast<double>(prod.size());
    const double mean = prod.mean();
    const double var = (prod - mean).square().sum() / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace

std::vector<ProbePair> default_probe_pairs(const ProductBasis& pb) {
    const auto& dx = pb.basis_x().kernel().domain();
    const auto& dy = pb.basis_y().kernel().domain();
    auto at = [&](double u, double v) {
        Point p(2);
        p << dx.lo + u * dx.width(), dy.lo + v * dy.width();
        return p;
    };
    return {
        {at(0.5, 0.5), at(0.5, 0.5)},  {at(0.1, 0.2), at(0.1, 0.2)},  {at(0.2, 0.3), at(0.4, 0.5)},
        {at(0.7, 0.2), at(0.6, 0.9)},  {at(0.0, 1.0), at(0.3, 0.8)},  {at(0.9, 0.1), at(0.2, 0.6)},
    };
}

SecondOrderReport second_order_identical_check(std::shared_ptr<const ProductBasis> pb,
                                               int n_samples, const std::vector<ProbePair>& probes,
                                               std::uint64_t seed, int product_truncation,
                                               double band) {
    if (n_samples < 2) throw SampleSizeError("need at least two samples");
    std::shared_ptr<const ProductBasis> prod_basis = pb;
    if (product_truncation > 0 && product_truncation != pb->truncation()) {
        prod_basis = std::make_shared<ProductBasis>(pb->basis_x(), pb->basis_y(), product_truncation);
    }
    const auto kl = kl_sample(pb, seed, n_samples);
    const auto prod = product_sample(prod_basis, seed ^ 0x9e3779b97f4a7c15ULL, n_samples);
    const SeparableKernel exact = pb->kernel();

    SecondOrderReport rep;
    rep.band = band;
    rep.samples = n_samples;
    rep.pass = true;
    for (const auto& pr : probes) {
        Eigen::VectorXd klp(n_samples), klq(n_samples), pp(n_samples), pq(n_samples);
        for (int s = 0; s < n_samples; ++s) {
            klp(s) = kl[static_cast<std::size_t>(s)](pr.p);
            klq(s) = kl[static_cast<std::size_t>(s)](pr.q);
            pp(s) = prod[static_cast<std::size_t>(s)](pr.p);
            pq(s) = prod[static_cast<std::size_t>(s)](pr.q);
        }
        CovarianceComparison c;
        c.pair = pr;
        c.exact = exact(pr.p, pr.q);
        c.theoretical_kl = pb->truncated_covariance(pr.p, pr.q);
        c.theoretical_product = product_process_covariance(*prod_basis, pr.p, pr.q);
        const auto ek = product_moment(klp, klq);
        const auto ep = product_moment(pp, pq);
        c.empirical_kl = ek.mean;
        c.se_kl = ek.se;
        c.empirical_product = ep.mean;
        c.se_product = ep.se;
        c.kl_matches_product = std::abs(ek.mean - ep.mean) <= band * std::hypot(ek.se, ep.se);
        c.kl_matches_exact = std::abs(ek.mean - c.exact) <= band * ek.se;
        c.product_matches_exact = std::abs(ep.mean - c.exact) <= band * ep.se;
        rep.pass = rep.pass && c.kl_matches_product && c.kl_matches_exact && c.product_matches_exact;
        rep.pairs.push_back(std::move(c));
    }
    return rep;
}

}  // namespace sepcov
