#include "sepcov/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "sepcov/parallel.hpp"

namespace sepcov {

std::string to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::LHD: return "lhd";
        case DesignKind::AxisAligned: return "axis";
        case DesignKind::FullGrid: return "grid";
        case DesignKind::MonteCarlo: return "mc";
    }
    return "?";
}

DesignKind design_kind_from_string(const std::string& name) {
    if (name == "lhd") return DesignKind::LHD;
    if (name == "axis") return DesignKind::AxisAligned;
    if (name == "grid") return DesignKind::FullGrid;
    if (name == "mc") return DesignKind::MonteCarlo;
    throw InvalidArgument("unknown design kind '" + name + "' (expected lhd, axis, grid or mc)");
}

std::string to_string(TruthSource source) {
    switch (source) {
        case TruthSource::SeparableKL: return "separable_kl";
        case TruthSource::ProductProcess: return "product";
        case TruthSource::RegressionPlusResidual: return "regression_plus_residual";
    }
    return "?";
}

TruthSource truth_source_from_string(const std::string& name) {
    if (name == "separable_kl") return TruthSource::SeparableKL;
    if (name == "product") return TruthSource::ProductProcess;
    if (name == "regression_plus_residual") return TruthSource::RegressionPlusResidual;
    throw InvalidArgument("unknown truth source '" + name +
                          "' (expected separable_kl, product or regression_plus_residual)");
}

std::vector<Interval> unit_box(std::size_t p) { return std::vector<Interval>(p, Interval(0.0, 1.0)); }

namespace {

std::vector<Interval> resolve_box(const std::vector<Interval>& box, std::size_t p) {
    if (box.empty()) return unit_box(p);
    if (box.size() != p) throw ShapeError("design box must have one interval per dimension");
    return box;
}

}  // namespace

double min_pairwise_distance(const PointSet& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) best = std::min(best, (pts.row(i) - pts.row(j)).squaredNorm());
    }
    return std::sqrt(best);
}

Design lhd(int n, std::size_t p, std::uint64_t seed, const std::vector<Interval>& box_in, bool maximin,
           bool centered) {
    if (n < 1) throw InvalidArgument("latin hypercube needs n >= 1");
    if (p < 1) throw InvalidArgument("latin hypercube needs p >= 1");
    const auto box = resolve_box(box_in, p);
    Rng rng = make_stream(seed, 0, stream_tag("lhd"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    PointSet pts(n, static_cast<Eigen::Index>(p));
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (std::size_t d = 0; d < p; ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i) {
            const double offset = centered ? 0.5 : unif(rng);
            const double u = (perm[static_cast<std::size_t>(i)] + offset) / n;
            pts(i, static_cast<Eigen::Index>(d)) = box[d].lo + u * box[d].width();
        }
    }

    if (maximin && n > 2) {
        std::uniform_int_distribution<int> row(0, n - 1);
        std::uniform_int_distribution<int> col(0, static_cast<int>(p) - 1);
        double current = min_pairwise_distance(pts);
        const int iterations = 200 * n * static_cast<int>(p);
        for (int it = 0; it < iterations; ++it) {
            const int c = col(rng);
            const int a = row(rng);
            const int b = row(rng);
            if (a == b) continue;
            std::swap(pts(a, c), pts(b, c));
            const double candidate = min_pairwise_distance(pts);
            if (candidate >= current) {
                current = candidate;
            } else {
                std::swap(pts(a, c), pts(b, c));
            }
        }
    }
    return {DesignKind::LHD, std::move(pts), seed, std::nullopt};
}

Design axis_design(const std::vector<int>& counts, const Point& base, const std::vector<Interval>& box) {
    const std::size_t p = counts.size();
    if (box.size() != p || static_cast<std::size_t>(base.size()) != p) {
        throw ShapeError("axis design needs matching counts, base point and box");
    }
    for (std::size_t d = 0; d < p; ++d) {
        if (!box[d].contains(base(static_cast<Eigen::Index>(d)))) {
            throw DomainError("axis design base point lies outside the box");
        }
        if (counts[d] < 1) throw InvalidArgument("axis design sweeps need at least one point");
    }
    const int total = 1 + std::accumulate(counts.begin(), counts.end(), 0);
    PointSet pts(total, static_cast<Eigen::Index>(p));
    pts.row(0) = base.transpose();
    Eigen::Index row = 1;
    for (std::size_t d = 0; d < p; ++d) {
        const int c = counts[d];
        const auto di = static_cast<Eigen::Index>(d);
        // c + 1 evenly spaced values; the one nearest the base coordinate is dropped.
        std::vector<double> values;
        for (int k = 0; k <= c; ++k) values.push_back(box[d].lo + box[d].width() * k / c);
        const auto nearest = std::min_element(values.begin(), values.end(), [&](double a, double b) {
            return std::abs(a - base(di)) < std::abs(b - base(di));
        });
        values.erase(nearest);
        for (double v : values) {
            pts.row(row) = base.transpose();
            pts(row, di) = v;
            ++row;
        }
    }
    return {DesignKind::AxisAligned, std::move(pts), 0, base};
}

Design axis_design(int n_per_axis, std::size_t p, const Point& base, const std::vector<Interval>& box) {
    if (n_per_axis < 2) throw InvalidArgument("axis design needs n_per_axis >= 2");
    return axis_design(std::vector<int>(p, n_per_axis), base, resolve_box(box, p));
}

Design axis_design_total(int n_runs, std::size_t p, const std::vector<Interval>& box_in) {
    if (n_runs < static_cast<int>(p) + 1) throw InvalidArgument("axis design needs n_runs >= p + 1");
    const auto box = resolve_box(box_in, p);
    Point base(static_cast<Eigen::Index>(p));
    for (std::size_t d = 0; d < p; ++d) base(static_cast<Eigen::Index>(d)) = box[d].center();
    const int per = (n_runs - 1) / static_cast<int>(p);
    const int extra = (n_runs - 1) % static_cast<int>(p);
    std::vector<int> counts(p, per);
    for (int d = 0; d < extra; ++d) ++counts[static_cast<std::size_t>(d)];
    return axis_design(counts, base, box);
}

Design full_grid(const std::vector<int>& counts, const std::vector<Interval>& box) {
    const auto grid = GridDesign::uniform(box, counts);
    return {DesignKind::FullGrid, grid.points(), 0, std::nullopt};
}

Design monte_carlo_design(int n, std::size_t p, std::uint64_t seed, const std::vector<Interval>& box_in) {
    const auto box = resolve_box(box_in, p);
    Rng rng = make_stream(seed, 0, stream_tag("mc-design"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    PointSet pts(n, static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < p; ++d) {
            pts(i, static_cast<Eigen::Index>(d)) = box[d].lo + unif(rng) * box[d].width();
        }
    }
    return {DesignKind::MonteCarlo, std::move(pts), seed, std::nullopt};
}

bool lies_on_axis_lines(const PointSet& pts, const Point& base, double tol) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const auto moved = ((pts.row(i).transpose() - base).array().abs() > tol).count();
        if (moved > 1) return false;
    }
    return true;
}

bool has_latin_projection(const PointSet& pts, const std::vector<Interval>& box) {
    const Eigen::Index n = pts.rows();
    if (static_cast<std::size_t>(pts.cols()) != box.size()) return false;
    for (Eigen::Index d = 0; d < pts.cols(); ++d) {
        std::vector<int> hits(static_cast<std::size_t>(n), 0);
        const auto& iv = box[static_cast<std::size_t>(d)];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = (pts(i, d) - iv.lo) / iv.width();
            auto bin = static_cast<Eigen::Index>(std::floor(u * static_cast<double>(n)));
            bin = std::clamp<Eigen::Index>(bin, 0, n - 1);
            ++hits[static_cast<std::size_t>(bin)];
        }
        if (std::any_of(hits.begin(), hits.end(), [](int h) { return h != 1; })) return false;
    }
    return true;
}

TruthBases TruthBases::build(const SeparableKernel& kernel, int nodes, std::size_t max_terms) {
    TruthBases tb;
    for (const auto& f : kernel.factors()) {
        tb.bases.push_back(nystrom_decompose(f, nodes));
        tb.truncation.push_back(tb.bases.back().rank());
    }
    auto terms = [&] {
        double t = 1.0;
        for (int n : tb.truncation) t *= n;
        return t;
    };
    while (terms() > static_cast<double>(max_terms)) {
        auto it = std::max_element(tb.truncation.begin(), tb.truncation.end());
        if (*it <= 1) break;
        --*it;
    }
    return tb;
}

TruthFunction TruthFunction::draw(TruthSource source, std::shared_ptr<const TruthBases> bases, Rng& rng,
                                  const std::vector<Interval>& box, double regression_strength) {
    TruthFunction f;
    f.source_ = source;
    f.bases_ = std::move(bases);
    std::normal_distribution<double> n01;
    const auto& trunc = f.bases_->truncation;
    const std::size_t p = trunc.size();

    if (source == TruthSource::ProductProcess) {
        for (int n : trunc) {
            Eigen::VectorXd z(n);
            for (int i = 0; i < n; ++i) z(i) = n01(rng);
            f.factors_.push_back(std::move(z));
        }
        return f;
    }

    Eigen::Index total = 1;
    for (int n : trunc) total *= n;
    f.tensor_.resize(total);
    for (Eigen::Index i = 0; i < total; ++i) f.tensor_(i) = n01(rng);

    if (source == TruthSource::RegressionPlusResidual) {
        double residual_var = 1.0;
        for (const auto& b : f.bases_->bases) residual_var *= b.kernel().variance();
        const double residual_sd = std::sqrt(residual_var);
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a + 1; b < p; ++b) {
                f.regressors_.push_back(Regressor::interaction(a, b, box[a].center(), box[b].center()));
            }
        }
        f.beta_.resize(static_cast<Eigen::Index>(f.regressors_.size()));
        Eigen::Index k = 0;
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a + 1; b < p; ++b) {
                // Centred uniform coordinate has SD width / sqrt(12).
                const double term_sd = box[a].width() * box[b].width() / 12.0;
                f.beta_(k++) = n01(rng) * regression_strength * residual_sd / term_sd;
            }
        }
    }
    return f;
}

double TruthFunction::operator()(const Point& pt) const {
    const auto& trunc = bases_->truncation;
    const std::size_t p = trunc.size();
    if (static_cast<std::size_t>(pt.size()) != p) throw ShapeError("truth function dimension mismatch");

    if (source_ == TruthSource::ProductProcess) {
        double v = 1.0;
        for (std::size_t d = 0; d < p; ++d) {
            v *= bases_->bases[d].features(pt(static_cast<Eigen::Index>(d)), trunc[d]).dot(factors_[d]);
        }
        return v;
    }

    Eigen::VectorXd t = tensor_;
    for (std::size_t d = 0; d < p; ++d) {
        const Eigen::VectorXd g = bases_->bases[d].features(pt(static_cast<Eigen::Index>(d)), trunc[d]);
        const Eigen::Index rest = t.size() / trunc[d];
        Eigen::Map<const Eigen::MatrixXd> m(t.data(), rest, trunc[d]);
        t = m * g;
    }
    double v = t(0);
    for (std::size_t i = 0; i < regressors_.size(); ++i) {
        v += beta_(static_cast<Eigen::Index>(i)) * regressors_[i].fn(pt);
    }
    return v;
}

Eigen::VectorXd TruthFunction::evaluate(const PointSet& pts) const {
    Eigen::VectorXd v(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) v(i) = (*this)(pts.row(i).transpose());
    return v;
}

void ExperimentConfig::validate() const {
    if (p < 1 || p > 6) throw InvalidArgument("experiments support 1 <= p <= 6");
    // n_runs == 0 is the no-data baseline.
    if (n_runs != 0 && n_runs < static_cast<int>(p) + 1) {
        throw InvalidArgument("n_runs must be at least p + 1 (or 0 for the no-data baseline)");
    }
    if (replicates < 10) throw InvalidArgument("experiments need at least 10 replicates");
    if (test_set_size < 2) throw InvalidArgument("test set needs at least two points");
    if (truth_sources.empty() || designs.empty()) throw InvalidArgument("no truth sources or designs");
    if (nodes < 4) throw InvalidArgument("spectral node count must be at least 4");
    if (!(regression_strength >= 0.0)) throw InvalidArgument("regression_strength must be non-negative");
}

SeparableKernel ExperimentConfig::kernel() const {
    std::vector<Kernel1D> f;
    for (std::size_t d = 0; d < p; ++d) {
        f.push_back(Kernel1D::squared_exponential(d == 0 ? variance : 1.0, length_scale));
    }
    return SeparableKernel(std::move(f));
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double normalized_rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    if (pred.size() != truth.size() || truth.size() == 0) throw ShapeError("nRMSE needs equal, non-empty vectors");
    const double rmse = std::sqrt((pred - truth).squaredNorm() / static_cast<double>(truth.size()));
    const double sd = std::sqrt((truth.array() - truth.mean()).square().mean());
    return rmse / sd;
}

double sign_test_p_value(int wins, int trials) {
    if (trials <= 0) return 1.0;
    double p = 0.0;
    for (int k = wins; k <= trials; ++k) {
        p += std::exp(std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) -
                      trials * std::log(2.0));
    }
    return std::min(1.0, p);
}

Design make_design(DesignKind kind, int n, std::size_t p, std::uint64_t seed, const std::vector<Interval>& box,
                   bool maximin) {
    switch (kind) {
        case DesignKind::LHD: return lhd(n, p, seed, box, maximin);
        case DesignKind::AxisAligned: return axis_design_total(n, p, box);
        case DesignKind::FullGrid: {
            const int per = std::max(1, static_cast<int>(std::lround(std::pow(n, 1.0 / static_cast<double>(p)))));
            return full_grid(std::vector<int>(p, per), resolve_box(box, p));
        }
        case DesignKind::MonteCarlo: return monte_carlo_design(n, p, seed, box);
    }
    throw InvalidArgument("unknown design kind");
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto box = unit_box(cfg.p);
    const SeparableKernel kernel = cfg.kernel();
    auto bases = std::make_shared<const TruthBases>(TruthBases::build(kernel, cfg.nodes, cfg.max_tensor_terms));

    const std::size_t n_truth = cfg.truth_sources.size();
    const std::size_t n_design = cfg.designs.size();
    const auto reps = static_cast<std::size_t>(cfg.replicates);
    ExperimentReport report;
    report.records.resize(reps * n_truth * n_design);

    const RegressionPrior mean_prior = RegressionPrior::constant(0.0, cfg.plug_in_mean ? 0.0 : kernel.total_variance());
    const EmulatorPrior prior(mean_prior, kernel);
    FitOptions options;
    options.plug_in_mean = cfg.plug_in_mean;

    const std::string ptag = ":p" + std::to_string(cfg.p);
    parallel_for(reps, [&](std::size_t r) {
        Rng test_rng = make_stream(cfg.master_seed, r, stream_tag("test" + ptag));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        PointSet test(cfg.test_set_size, static_cast<Eigen::Index>(cfg.p));
        for (Eigen::Index i = 0; i < test.rows(); ++i) {
            for (Eigen::Index d = 0; d < test.cols(); ++d) test(i, d) = unif(test_rng);
        }

        for (std::size_t t = 0; t < n_truth; ++t) {
            const TruthSource source = cfg.truth_sources[t];
            Rng truth_rng = make_stream(cfg.master_seed, r, stream_tag("truth:" + to_string(source) + ptag));
            const TruthFunction truth = TruthFunction::draw(source, bases, truth_rng, box, cfg.regression_strength);
            const Eigen::VectorXd truth_test = truth.evaluate(test);

            for (std::size_t k = 0; k < n_design; ++k) {
                const DesignKind kind = cfg.designs[k];
                ExperimentRecord& rec = report.records[(r * n_truth + t) * n_design + k];
                rec.truth = source;
                rec.design = kind;
                rec.p = cfg.p;
                rec.replicate = static_cast<int>(r);
                try {
                    RunEnsemble ens;
                    if (cfg.n_runs > 0) {
                        Rng design_rng = make_stream(cfg.master_seed, r,
                                                     stream_tag("design:" + to_string(kind) + ptag + ":n" +
                                                                std::to_string(cfg.n_runs)));
                        const Design design = make_design(kind, cfg.n_runs, cfg.p, design_rng(), box, cfg.maximin);
                        ens = RunEnsemble(design.points, truth.evaluate(design.points));
                    } else {
                        ens = RunEnsemble(PointSet(0, static_cast<Eigen::Index>(cfg.p)), Eigen::VectorXd(0));
                    }
                    rec.n = static_cast<int>(ens.size());
                    const EmulatorPosterior post = fit(prior, ens, options);
                    rec.nrmse = normalized_rmse(post.mean(test), truth_test);
                } catch (const Error& e) {
                    rec.n = cfg.n_runs;
                    rec.nrmse = std::numeric_limits<double>::quiet_NaN();
                    rec.error = e.what();
                }
            }
        }
    });
    return report;
}

ExperimentReport n10p_sweep(const std::vector<std::size_t>& p_values, const std::vector<int>& multipliers,
                            const ExperimentConfig& cfg) {
    for (int m : multipliers) {
        if (m != 2 && m != 5 && m != 10 && m != 20) {
            throw InvalidArgument("sweep multipliers must be drawn from {2, 5, 10, 20}");
        }
    }
    ExperimentReport all;
    for (std::size_t p : p_values) {
        for (int m : multipliers) {
            ExperimentConfig c = cfg;
            c.p = p;
            c.n_runs = m * static_cast<int>(p);
            auto rep = run_experiment(c);
            all.records.insert(all.records.end(), rep.records.begin(), rep.records.end());
        }
    }
    return all;
}

std::vector<Aggregate> ExperimentReport::aggregates() const {
    using Key = std::tuple<int, int, int, std::size_t>;
    std::map<Key, Aggregate> groups;
    std::map<Key, std::vector<double>> values;
    std::vector<Key> order;
    for (const auto& r : records) {
        const Key key{static_cast<int>(r.truth), static_cast<int>(r.design), r.n, r.p};
        auto [it, inserted] = groups.try_emplace(key, Aggregate{r.truth, r.design, r.n, r.p});
        if (inserted) order.push_back(key);
        if (std::isfinite(r.nrmse)) {
            values[key].push_back(r.nrmse);
        } else {
            ++it->second.failures;
        }
    }
    std::vector<Aggregate> out;
    for (const auto& key : order) {
        Aggregate a = groups.at(key);
        const auto& v = values[key];
        a.count = static_cast<int>(v.size());
        a.median = median(v);
        a.q1 = quantile(v, 0.25);
        a.q3 = quantile(v, 0.75);
        out.push_back(a);
    }
    return out;
}

std::optional<Aggregate> ExperimentReport::aggregate(TruthSource t, DesignKind d, int n, std::size_t p) const {
    for (const auto& a : aggregates()) {
        if (a.truth == t && a.design == d && a.n == n && a.p == p) return a;
    }
    return std::nullopt;
}

std::vector<SignTest> ExperimentReport::sign_tests() const {
    using Key = std::tuple<int, int, std::size_t>;
    std::map<Key, std::map<int, std::pair<double, double>>> paired;
    std::vector<Key> order;
    for (const auto& r : records) {
        if (r.design != DesignKind::LHD && r.design != DesignKind::AxisAligned) continue;
        const Key key{static_cast<int>(r.truth), r.n, r.p};
        if (!paired.contains(key)) order.push_back(key);
        auto& slot = paired[key].try_emplace(r.replicate, std::numeric_limits<double>::quiet_NaN(),
                                             std::numeric_limits<double>::quiet_NaN()).first->second;
        (r.design == DesignKind::LHD ? slot.first : slot.second) = r.nrmse;
    }
    std::vector<SignTest> out;
    for (const auto& key : order) {
        SignTest s{static_cast<TruthSource>(std::get<0>(key)), std::get<1>(key), std::get<2>(key)};
        bool any_pair = false;
        for (const auto& [rep, v] : paired.at(key)) {
            if (!std::isfinite(v.first) || !std::isfinite(v.second)) continue;
            any_pair = true;
            if (v.first < v.second) {
                ++s.wins;
            } else if (v.first > v.second) {
                ++s.losses;
            } else {
                ++s.ties;
            }
        }
        if (!any_pair) continue;
        s.p_value = sign_test_p_value(s.wins, s.wins + s.losses);
        out.push_back(s);
    }
    return out;
}

}  // namespace sepcov
