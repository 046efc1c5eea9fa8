#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace semibin {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed of the `index`-th draw of stream `stream` under `master`:
// mix64(mix64(master ^ mix64(stream)) + index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(master ^ mix64(stream)) + index);
}

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Index drawn with probability proportional to weights (which sum to 1).
inline std::size_t draw_categorical(Rng& rng, std::span<const double> weights) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
        acc += weights[k];
        if (u < acc) return k;
    }
    return weights.size() - 1;
}

inline std::int64_t draw_poisson(Rng& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
}

// Stream ids for derive_seed.
enum class SeedStream : std::uint64_t {
    initialization = 1,
    parametric_bootstrap = 2,
    nonparametric_bootstrap = 3,
    simulation = 4,
};

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
    return derive_seed(master, static_cast<std::uint64_t>(stream), index);
}

}  // namespace semibin
