#include "sepcov/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "sepcov/design.hpp"
#include "sepcov/emulator.hpp"
#include "sepcov/errors.hpp"
#include "sepcov/random.hpp"
#include "sepcov/second_order.hpp"
#include "sepcov/spectral.hpp"

namespace sepcov {

bool SuiteResult::pass() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

std::vector<std::string> check_suites() { return {"eq4", "eq5", "isotropy", "mercer", "second_order"}; }

namespace {

Assertion at_most(std::string name, double value, double threshold) {
    return {std::move(name), value <= threshold, value, threshold, "<="};
}

Assertion above(std::string name, double value, double threshold) {
    return {std::move(name), value > threshold, value, threshold, ">"};
}

SeparableKernel random_kernel(Rng& rng, const std::vector<Interval>& box) {
    std::uniform_real_distribution<double> var(0.2, 5.0), theta(0.3, 4.0), alpha(0.5, 2.0), coin(0.0, 1.0);
    std::vector<Kernel1D> f;
    for (const auto& dom : box) {
        if (coin(rng) < 0.5) {
            f.push_back(Kernel1D::squared_exponential(var(rng), theta(rng), dom));
        } else {
            f.push_back(Kernel1D::power_exponential(var(rng), theta(rng), alpha(rng), dom));
        }
    }
    return SeparableKernel(std::move(f));
}

double uniform_in(Rng& rng, const Interval& d) { return std::uniform_real_distribution<double>(d.lo, d.hi)(rng); }

CovarianceFn with_regression(const SeparableKernel& k, const CheckOptions& opts) {
    if (opts.regression_dims.empty()) return as_covariance(k);
    std::vector<Regressor> regs;
    for (auto d : opts.regression_dims) {
        if (d >= k.dim()) throw InvalidArgument("regression dimension out of range");
        regs.push_back(Regressor::linear(d));
    }
    const auto n = static_cast<Eigen::Index>(regs.size());
    const EmulatorPrior prior(RegressionPrior(std::move(regs), Eigen::VectorXd::Zero(n),
                                              opts.regression_variance * Eigen::MatrixXd::Identity(n, n)),
                              k);
    return prior.covariance_fn();
}

SuiteResult eq4(const CheckOptions& opts) {
    SuiteResult r{"eq4", {}, 0.0};
    Rng rng = make_stream(opts.seed, 0, stream_tag("check:eq4"));
    const int kernels = opts.kernel ? 1 : 5;
    for (int t = 0; t < kernels; ++t) {
        const SeparableKernel k = opts.kernel ? *opts.kernel : random_kernel(rng, unit_box(2));
        if (k.dim() != 2) throw ShapeError("eq4 suite needs a two-factor kernel");
        const auto cov = with_regression(k, opts);
        const auto dom = k.domains();
        double worst = 0.0;
        for (int g = 0; g < 200; ++g) {
            const double x = uniform_in(rng, dom[0]), x2 = uniform_in(rng, dom[0]);
            const double y = uniform_in(rng, dom[1]), y2 = uniform_in(rng, dom[1]);
            PointSet c(1, 2);
            c << x2, y;
            const auto cc = conditional_covariance(cov, Point{{x, y}}, Point{{x2, y2}}, c);
            worst = std::max(worst, std::abs(cc.value));
        }
        r.assertions.push_back(at_most("kernel " + std::to_string(t) + " max |conditional covariance|", worst, 1e-10));
    }
    return r;
}

SuiteResult eq5(const CheckOptions& opts) {
    SuiteResult r{"eq5", {}, 0.0};
    Rng rng = make_stream(opts.seed, 0, stream_tag("check:eq5"));
    const int configs = 20;
    for (int t = 0; t < configs; ++t) {
        const SeparableKernel k = opts.kernel ? *opts.kernel : random_kernel(rng, unit_box(2));
        if (k.dim() != 2) throw ShapeError("eq5 suite needs a two-factor kernel");
        const auto dom = k.domains();
        const double y = uniform_in(rng, dom[1]), y2 = uniform_in(rng, dom[1]);
        double lo = INFINITY, hi = -INFINITY;
        for (int i = 0; i < 50; ++i) {
            const double c = cross_correlation(k, uniform_in(rng, dom[0]), y, y2);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        r.assertions.push_back(at_most("config " + std::to_string(t) + " correlation range over x", hi - lo, 1e-12));
    }
    return r;
}

SuiteResult isotropy(const CheckOptions& opts) {
    SuiteResult r{"isotropy", {}, 0.0};
    const auto sq = [](double t1, double t2) {
        return SeparableKernel({Kernel1D::squared_exponential(1.0, t1), Kernel1D::squared_exponential(1.0, t2)});
    };
    r.assertions.push_back(at_most("common theta squared exponential", isotropy_residual(sq(1.0, 1.0)), 1e-12));
    r.assertions.push_back(above("unequal theta squared exponential", isotropy_residual(sq(1.0, 2.0)), 1e-3));
    const SeparableKernel pe({Kernel1D::power_exponential(1.0, 1.0, 1.0), Kernel1D::power_exponential(1.0, 1.0, 1.0)});
    r.assertions.push_back(above("exponential (alpha = 1)", isotropy_residual(pe), 1e-3));
    if (opts.kernel) {
        const auto& k = *opts.kernel;
        const bool iso = k.dim() == 2 && k.factor(0).family() == KernelFamily::SquaredExponential &&
                         k.factor(1).family() == KernelFamily::SquaredExponential &&
                         k.factor(0).length_scale() == k.factor(1).length_scale();
        const double v = isotropy_residual(k);
        r.assertions.push_back(iso ? at_most("configured kernel", v, 1e-12) : above("configured kernel", v, 0.0));
    }
    return r;
}

double max_probe_error(const SpectralBasis& b, int n) {
    const auto g = Eigen::VectorXd::LinSpaced(21, b.kernel().domain().lo, b.kernel().domain().hi);
    double err = 0.0;
    for (Eigen::Index a = 0; a < g.size(); ++a) {
        for (Eigen::Index c = 0; c < g.size(); ++c) {
            err = std::max(err, std::abs(mercer_reconstruct(b, g(a), g(c), n) - b.kernel()(g(a), g(c))));
        }
    }
    return err;
}

SuiteResult mercer(const CheckOptions& opts) {
    SuiteResult r{"mercer", {}, 0.0};
    const SeparableKernel k = opts.kernel ? *opts.kernel
                                          : SeparableKernel({Kernel1D::squared_exponential(1.0, 1.0),
                                                             Kernel1D::squared_exponential(1.0, 1.0)});
    std::vector<SpectralBasis> bases;
    for (std::size_t d = 0; d < k.dim(); ++d) {
        const auto& f = k.factor(d);
        const auto b = nystrom_decompose(f, 40);
        const std::string tag = "factor " + std::to_string(d) + " ";
        double node_err = 0.0;
        for (int a = 0; a < b.node_count(); ++a) {
            for (int c = 0; c < b.node_count(); ++c) {
                node_err = std::max(node_err, std::abs(mercer_reconstruct(b, b.nodes()(a), b.nodes()(c), b.rank()) -
                                                       f(b.nodes()(a), b.nodes()(c))));
            }
        }
        r.assertions.push_back(at_most(tag + "node Gram reconstruction", node_err, 1e-8));
        const Eigen::MatrixXd gram_q = b.node_values().transpose() * b.weights().asDiagonal() * b.node_values();
        r.assertions.push_back(at_most(tag + "orthonormality defect",
                                       (gram_q - Eigen::MatrixXd::Identity(b.rank(), b.rank())).cwiseAbs().maxCoeff(),
                                       1e-8));
        double worst_increase = 0.0, prev = INFINITY;
        for (int n = 1; n <= b.rank(); ++n) {
            const double e = max_probe_error(b, n);
            if (std::isfinite(prev)) worst_increase = std::max(worst_increase, e - prev);
            prev = e;
        }
        r.assertions.push_back(at_most(tag + "probe error increase over truncation", worst_increase, 1e-12));
        bases.push_back(b);
    }
    if (bases.size() >= 2) {
        const int n = std::min({bases[0].rank(), bases[1].rank(), 6});
        auto pb = std::make_shared<const ProductBasis>(bases[0], bases[1], n);
        double worst = 0.0;
        for (const auto& f : kl_sample(pb, opts.seed, 5)) {
            const auto z = kl_project(f.grid(pb->basis_x().nodes(), pb->basis_y().nodes()), *pb);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double expected = std::sqrt(pb->basis_x().eigenvalues()(i) * pb->basis_y().eigenvalues()(j)) *
                                            f.coefficients()(i, j);
                    worst = std::max(worst, std::abs(z(i, j) - expected));
                }
            }
        }
        r.assertions.push_back(at_most("projection round trip", worst, 1e-6));
    }
    return r;
}

SuiteResult second_order(const CheckOptions& opts) {
    SuiteResult r{"second_order", {}, 0.0};
    const SeparableKernel k = opts.kernel ? *opts.kernel
                                          : SeparableKernel({Kernel1D::squared_exponential(1.0, 1.0),
                                                             Kernel1D::squared_exponential(1.0, 1.0)});
    if (k.dim() != 2) throw ShapeError("second_order suite needs a two-factor kernel");
    const auto bx = nystrom_decompose(k.factor(0), 40);
    const auto by = nystrom_decompose(k.factor(1), 40);
    auto pb = std::make_shared<const ProductBasis>(bx, by, std::min({bx.rank(), by.rank(), 6}));
    const auto rep = second_order_identical_check(pb, 4000, default_probe_pairs(*pb), opts.seed);
    for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
        const auto& c = rep.pairs[i];
        const std::string tag = "pair " + std::to_string(i) + " ";
        r.assertions.push_back(at_most(tag + "KL vs exact (SE units)", std::abs(c.empirical_kl - c.exact) / c.se_kl, 5.0));
        r.assertions.push_back(
            at_most(tag + "product vs exact (SE units)", std::abs(c.empirical_product - c.exact) / c.se_product, 5.0));
        r.assertions.push_back(at_most(tag + "KL vs product (SE units)",
                                       std::abs(c.empirical_kl - c.empirical_product) / std::hypot(c.se_kl, c.se_product),
                                       5.0));
    }
    auto pb1 = std::make_shared<const ProductBasis>(bx, by, 1);
    const Point centre{{k.factor(0).domain().center(), k.factor(1).domain().center()}};
    const auto diag = distribution_diagnostics(product_sample(pb1, opts.seed, 100000), centre);
    r.assertions.push_back(at_most("product process kurtosis |k - 9|, one term", std::abs(diag.kurtosis - 9.0), 0.5));
    return r;
}

}  // namespace

SuiteResult run_check(const std::string& suite, const CheckOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    if (suite == "eq4") {
        r = eq4(opts);
    } else if (suite == "eq5") {
        r = eq5(opts);
    } else if (suite == "isotropy") {
        r = isotropy(opts);
    } else if (suite == "mercer") {
        r = mercer(opts);
    } else if (suite == "second_order") {
        r = second_order(opts);
    } else {
        throw InvalidArgument("unknown check suite '" + suite + "'");
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace sepcov
