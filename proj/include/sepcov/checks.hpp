#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sepcov/kernel.hpp"

namespace sepcov {

struct Assertion {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation;  ///< "<=", ">" ...
};

struct SuiteResult {
    std::string suite;
    std::vector<Assertion> assertions;
    double seconds = 0.0;

    [[nodiscard]] bool pass() const;
};

struct CheckOptions {
    std::uint64_t seed = 20260101;
    /// Kernel under test; suites fall back to their own random or default kernels.
    std::optional<SeparableKernel> kernel;
    /// Variance of a linear regressor on each listed dimension added to the
    /// kernel, which makes the covariance non-separable.
    std::vector<std::size_t> regression_dims;
    double regression_variance = 1.0;
};

[[nodiscard]] std::vector<std::string> check_suites();

/// Runs one named suite; throws InvalidArgument for unknown names.
[[nodiscard]] SuiteResult run_check(const std::string& suite, const CheckOptions& opts = {});

}  // namespace sepcov
