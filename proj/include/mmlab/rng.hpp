#pragma once

#include <cstdint>

namespace mmlab {

/// Stateless counter-based generator: every (seed, stream, counter) triple maps to an
/// independent uniform draw, so parallel consumers never share state.
struct CounterRng {
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t draw(std::uint64_t seed, std::uint64_t stream,
                                        std::uint64_t counter) {
        return mix(seed ^ mix(stream ^ mix(counter)));
    }

    /// Uniform double in [0, 1).
    static double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
        return static_cast<double>(draw(seed, stream, counter) >> 11) * 0x1.0p-53;
    }
};

}  // namespace mmlab
