#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sepcov/checks.hpp"
#include "sepcov/design.hpp"
#include "sepcov/emulator.hpp"
#include "sepcov/kernel.hpp"
#include "sepcov/second_order.hpp"
#include "sepcov/spectral.hpp"

namespace sepcov {

using Json = nlohmann::json;

/// Malformed JSON or CSV input, with a 1-based position when known.
class ParseError : public InvalidArgument {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column);
    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Parses JSON text; syntax errors are reported as ParseError with line and column.
[[nodiscard]] Json parse_json(std::string_view text, const std::string& source = "<input>");
[[nodiscard]] Json read_json_file(const std::string& path);

/// Locale-independent shortest round-trip decimal.
[[nodiscard]] std::string format_double(double v);

// {"family":"sqexp","variance":1.0,"length_scale":1.0,"domain":[0,1]}
[[nodiscard]] Json to_json(const Kernel1D& k);
[[nodiscard]] Kernel1D kernel1d_from_json(const Json& j);
// {"factors":[...]}
[[nodiscard]] Json to_json(const SeparableKernel& k);
[[nodiscard]] SeparableKernel kernel_from_json(const Json& j);

[[nodiscard]] Json to_json(const SpectralBasis& b);
[[nodiscard]] SpectralBasis basis_from_json(const Json& j);

// {order, worst_violation, monomial_a, monomial_b, pass}
[[nodiscard]] Json to_json(const UncorrelationReport& r);
[[nodiscard]] Json to_json(const SecondOrderReport& r);
[[nodiscard]] Json to_json(const SuiteResult& r);

// {"regressors":[{"type":"constant"},{"type":"linear","dim":0},
//  {"type":"interaction","dims":[0,1],"centers":[0.5,0.5]}],
//  "mean":[...], "variance": s  or  "covariance":[[...]]}
// Missing mean is zero; a scalar variance gives s * I.
[[nodiscard]] RegressionPrior regression_prior_from_json(const Json& j);

/// Header "x,y,value", one row per grid node, x outer.
void write_field_csv(std::ostream& os, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                     const Eigen::MatrixXd& values);

/// Columns x1..xp plus f; other columns are rejected.
[[nodiscard]] RunEnsemble read_ensemble_csv(std::istream& is);
void write_ensemble_csv(std::ostream& os, const RunEnsemble& e);

/// Columns x1..xp, mean, sd.
void write_posterior_csv(std::ostream& os, const PointSet& pts, const Prediction& pred);

/// Header "truth,design,n,p,replicate,nrmse".
void write_experiment_csv(std::ostream& os, const ExperimentReport& r);
[[nodiscard]] Json experiment_summary_json(const ExperimentReport& r);

[[nodiscard]] ExperimentConfig experiment_config_from_json(const Json& j);
[[nodiscard]] Json to_json(const ExperimentConfig& c);

}  // namespace sepcov
