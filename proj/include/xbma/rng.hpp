#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace xbma {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream identifiers for the sub-streams split off a task seed.
enum class Stream : std::uint64_t {
    Genotypes = 1,
    Outcome = 2,
    GibbsM1 = 3,
    GibbsM2 = 4,
    GibbsNull = 5,
    AnchorM1 = 6,
    AnchorM2 = 7,
    AnchorNull = 8,
    Pooling = 9,
};

// Counter-based derivation: the seed of task `index` under `master` does not
// depend on how many other tasks ran or in what order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream) {
    return derive_seed(master, static_cast<std::uint64_t>(stream) << 48);
}

inline Rng make_rng(std::uint64_t seed) {
    return Rng(splitmix64(seed));
}

inline double uniform01(Rng& rng) {
    // 53 random bits, open at 0 so log() is always finite.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double std_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline double std_exponential(Rng& rng) {
    return -std::log(uniform01(rng));
}

} // namespace xbma
