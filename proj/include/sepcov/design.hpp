#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sepcov/emulator.hpp"
#include "sepcov/kernel.hpp"
#include "sepcov/spectral.hpp"

namespace sepcov {

enum class DesignKind { LHD, AxisAligned, FullGrid, MonteCarlo };

[[nodiscard]] std::string to_string(DesignKind kind);
[[nodiscard]] DesignKind design_kind_from_string(const std::string& name);

struct Design {
    DesignKind kind;
    PointSet points;
    std::uint64_t seed = 0;
    std::optional<Point> base_point;  ///< axis-aligned designs only

    [[nodiscard]] Eigen::Index n() const { return points.rows(); }
    [[nodiscard]] Eigen::Index p() const { return points.cols(); }
};

[[nodiscard]] std::vector<Interval> unit_box(std::size_t p);

/// Latin hypercube: every one-dimensional projection has exactly one point
/// in each of n equal bins. Positions within bins are uniform, or at bin
/// centres when `centered`. With `maximin`, coordinate swaps within columns
/// are accepted while they increase the minimum pairwise distance.
[[nodiscard]] Design lhd(int n, std::size_t p, std::uint64_t seed, const std::vector<Interval>& box = {},
                         bool maximin = false, bool centered = false);

/// Base point plus, for axis d, `counts[d]` points that differ from the base
/// only in coordinate d.
[[nodiscard]] Design axis_design(const std::vector<int>& counts, const Point& base,
                                 const std::vector<Interval>& box);
/// p * n_per_axis + 1 points.
[[nodiscard]] Design axis_design(int n_per_axis, std::size_t p, const Point& base,
                                 const std::vector<Interval>& box = {});
/// Exactly `n_runs` points, sweeps as even as possible, base at the box centre.
[[nodiscard]] Design axis_design_total(int n_runs, std::size_t p, const std::vector<Interval>& box = {});

[[nodiscard]] Design full_grid(const std::vector<int>& counts, const std::vector<Interval>& box);
[[nodiscard]] Design monte_carlo_design(int n, std::size_t p, std::uint64_t seed,
                                        const std::vector<Interval>& box = {});

[[nodiscard]] double min_pairwise_distance(const PointSet& pts);

/// True when every point differs from `base` in at most one coordinate.
[[nodiscard]] bool lies_on_axis_lines(const PointSet& pts, const Point& base, double tol = 1e-12);

/// True when each column of the design hits each of n equal bins of `box` once.
[[nodiscard]] bool has_latin_projection(const PointSet& pts, const std::vector<Interval>& box);

enum class TruthSource { SeparableKL, ProductProcess, RegressionPlusResidual };

[[nodiscard]] std::string to_string(TruthSource source);
[[nodiscard]] TruthSource truth_source_from_string(const std::string& name);

/// Per-dimension spectral bases shared by all truth draws in an experiment.
struct TruthBases {
    std::vector<SpectralBasis> bases;
    std::vector<int> truncation;  ///< retained terms per dimension

    /// Decomposes each factor and caps the tensor size at `max_terms`.
    static TruthBases build(const SeparableKernel& kernel, int nodes, std::size_t max_terms);
};

/// A random function on the box: sum over the tensor of coefficients times
/// products of per-dimension features, a product of per-dimension sums, or
/// the former plus a random regression surface.
class TruthFunction {
public:
    static TruthFunction draw(TruthSource source, std::shared_ptr<const TruthBases> bases, Rng& rng,
                              const std::vector<Interval>& box, double regression_strength);

    [[nodiscard]] double operator()(const Point& p) const;
    [[nodiscard]] Eigen::VectorXd evaluate(const PointSet& pts) const;
    [[nodiscard]] TruthSource source() const { return source_; }

private:
    TruthSource source_ = TruthSource::SeparableKL;
    std::shared_ptr<const TruthBases> bases_;
    Eigen::VectorXd tensor_;                  // SeparableKL part, last index fastest
    std::vector<Eigen::VectorXd> factors_;    // ProductProcess coefficients per dimension
    std::vector<Regressor> regressors_;
    Eigen::VectorXd beta_;
};

struct ExperimentConfig {
    std::size_t p = 2;
    int n_runs = 20;  ///< 10 p by convention
    std::vector<TruthSource> truth_sources{TruthSource::SeparableKL, TruthSource::ProductProcess,
                                           TruthSource::RegressionPlusResidual};
    std::vector<DesignKind> designs{DesignKind::LHD, DesignKind::AxisAligned};
    int replicates = 30;
    std::uint64_t master_seed = 20260101;
    int test_set_size = 500;
    double variance = 1.0;
    double length_scale = 2.0;  ///< theta per dimension, domain [0,1]^p
    int nodes = 48;
    std::size_t max_tensor_terms = 20000;
    double regression_strength = 2.0;  ///< regression SD relative to residual SD
    bool maximin = false;
    bool plug_in_mean = true;

    /// Throws InvalidArgument on violated constraints.
    void validate() const;
    [[nodiscard]] SeparableKernel kernel() const;
};

struct ExperimentRecord {
    TruthSource truth;
    DesignKind design;
    int n = 0;
    std::size_t p = 0;
    int replicate = 0;
    double nrmse = 0.0;  ///< NaN when the fit failed
    std::string error;
};

struct Aggregate {
    TruthSource truth;
    DesignKind design;
    int n = 0;
    std::size_t p = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    int count = 0;
    int failures = 0;
};

struct SignTest {
    TruthSource truth;
    int n = 0;
    std::size_t p = 0;
    int wins = 0;    ///< replicates where the LHD error is strictly smaller
    int losses = 0;
    int ties = 0;
    double p_value = 1.0;  ///< one-sided, H1: LHD better
};

struct ExperimentReport {
    std::vector<ExperimentRecord> records;

    [[nodiscard]] std::vector<Aggregate> aggregates() const;
    [[nodiscard]] std::optional<Aggregate> aggregate(TruthSource t, DesignKind d, int n, std::size_t p) const;
    /// Paired sign tests of LHD against axis-aligned designs.
    [[nodiscard]] std::vector<SignTest> sign_tests() const;
};

/// P(X >= wins) for X ~ Binomial(trials, 1/2).
[[nodiscard]] double sign_test_p_value(int wins, int trials);

[[nodiscard]] double median(std::vector<double> v);
[[nodiscard]] double quantile(std::vector<double> v, double q);

/// RMSE of `pred` against `truth` divided by the (population) SD of `truth`.
[[nodiscard]] double normalized_rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

[[nodiscard]] Design make_design(DesignKind kind, int n, std::size_t p, std::uint64_t seed,
                                 const std::vector<Interval>& box, bool maximin);

/// Draws a truth per replicate, evaluates it on each design, fits the
/// separable emulator with a constant mean and scores nRMSE on a Monte Carlo
/// test set. Replicates run in parallel with per-replicate streams.
[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// run_experiment for every p in `p_values` and n = multiplier * p.
/// Multipliers must come from {2, 5, 10, 20}.
[[nodiscard]] ExperimentReport n10p_sweep(const std::vector<std::size_t>& p_values,
                                          const std::vector<int>& multipliers,
                                          const ExperimentConfig& cfg);

}  // namespace sepcov
