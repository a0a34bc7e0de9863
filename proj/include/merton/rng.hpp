#pragma once

#include <cstdint>

namespace merton {

// SplitMix64 finalizer; bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t z);

// Standard normal quantile (Wichura's AS 241 rational approximation,
// accurate to about 1e-15 in the central range). Requires u in (0, 1).
double normal_quantile(double u);

// Stateless counter-based normal stream: the draw at (stream, step) is a
// pure function of the master seed, so path count, evaluation order and
// thread count never change results.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : base_(mix64(seed)) {}

    double uniform(std::uint64_t stream, std::uint64_t step) const;
    double normal(std::uint64_t stream, std::uint64_t step) const;

private:
    std::uint64_t base_;
};

} // namespace merton
