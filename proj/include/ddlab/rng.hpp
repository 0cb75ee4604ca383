#pragma once

#include <cstdint>
#include <random>

namespace ddlab {

using Rng = std::mt19937_64;

enum class StreamTag : std::uint32_t { init = 1, eval = 2, elite = 3, mutate = 4, disorder = 5, sample = 6 };

// Independent stream per (seed, generation, agent, rollout, purpose). Results never
// depend on which worker draws from which stream.
inline Rng make_stream(std::uint64_t seed, std::uint64_t generation, std::uint64_t agent,
                       std::uint64_t rollout, StreamTag tag) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(generation), static_cast<std::uint32_t>(agent),
                     static_cast<std::uint32_t>(rollout), static_cast<std::uint32_t>(tag)};
    return Rng(sq);
}

// 53 random mantissa bits -> [0,1)
inline double uniform01(Rng& r) { return static_cast<double>(r() >> 11) * 0x1.0p-53; }

inline double gaussian(Rng& r) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(r);
}

}  // namespace ddlab
