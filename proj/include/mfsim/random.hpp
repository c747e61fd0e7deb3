#pragma once

#include <cstdint>
#include <random>

namespace mfsim {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to expand one master seed into independent streams.
constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for stream `index` under `master`. Counter-based, so any subset of
/// streams can be generated in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t purpose = 0) noexcept {
    return mix_seed(mix_seed(master ^ mix_seed(purpose)) + index);
}

/// Uniform on [0,1) with 53 random bits. Unlike std::uniform_real_distribution
/// the mapping is fixed, so streams are identical across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on the open interval (0,1).
inline double uniform_open(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace mfsim
