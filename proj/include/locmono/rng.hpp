#pragma once

#include <cstdint>
#include <random>

namespace locmono {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic seed for the (stream, index) counter under a master seed.
/// Distinct counters give statistically independent engines, so results do not
/// depend on the order in which work items are scheduled.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) noexcept;

/// Stream identifiers used across the toolkit.
namespace streams {
inline constexpr std::uint64_t wiener = 1;
inline constexpr std::uint64_t audit = 2;
inline constexpr std::uint64_t initial_condition = 3;
inline constexpr std::uint64_t fresh_crn = 4;
inline constexpr std::uint64_t test = 99;
}  // namespace streams

/// Random stream bound to one (seed, stream, index) counter.
class RandomStream {
public:
    RandomStream(std::uint64_t master, std::uint64_t stream, std::uint64_t index)
        : engine_(derive_seed(master, stream, index)) {}

    double normal() { return normal_(engine_); }
    /// Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace locmono
