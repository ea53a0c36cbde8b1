#ifndef CSS_RNG_HPP
#define CSS_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace css {

// splitmix64; used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over the component name.
inline std::uint64_t hash_name(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// All randomness flows from one top-level seed via named sub-seeds.
inline std::uint64_t named_seed(std::uint64_t seed, std::string_view component) {
    return mix64(seed ^ hash_name(component));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view component) {
    return Rng(named_seed(seed, component));
}

inline double uniform(Rng& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { // inclusive bounds
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double gaussian(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

} // namespace css

#endif
