#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace npf {

/// Configuration is invalid (bad file, bad keys, bad values). CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::vector<std::string> details = {})
        : std::runtime_error(what), details_(std::move(details)) {}
    const std::vector<std::string>& details() const { return details_; }

private:
    std::vector<std::string> details_;
};

/// A solver did not converge or a step could not be completed. CLI exit code 3.
class SolverError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A verification mode ran to completion and the property failed. CLI exit code 4.
class VerificationFailure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Pairwise (blocked recursive) summation: fixed order, bit-reproducible,
/// error growth O(eps log n) instead of O(eps n).
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 32) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

/// Uniform double in [0,1) from the top 53 bits of the generator.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace npf
