#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sepcov {

using Rng = std::mt19937_64;

/// Independent stream for (master_seed, index, tag). Replicates draw from
/// their own stream, so results do not depend on scheduling.
[[nodiscard]] Rng make_stream(std::uint64_t master_seed, std::uint64_t index = 0,
                              std::uint64_t tag = 0);

/// Stable 64-bit tag for a stream label (FNV-1a).
[[nodiscard]] constexpr std::uint64_t stream_tag(std::string_view label) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

/// Zero-mean, unit-variance laws for expansion coefficients.
enum class CoefficientLaw { Gaussian, Rademacher, Uniform };

[[nodiscard]] double draw(CoefficientLaw law, Rng& rng);

}  // namespace sepcov
