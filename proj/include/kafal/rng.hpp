#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace kafal {

// Named sub-stream tags. Every random decision in a run draws from an engine
// derived as mix(master_seed, tag, coords...), so the schedule is independent
// of worker count and execution order.
namespace stream {
inline constexpr std::uint64_t model_init = 0x01;
inline constexpr std::uint64_t partition = 0x02;
inline constexpr std::uint64_t label_split = 0x03;
inline constexpr std::uint64_t selection = 0x04;
inline constexpr std::uint64_t local_update = 0x05;
inline constexpr std::uint64_t acquisition = 0x06;
inline constexpr std::uint64_t dataset = 0x07;
} // namespace stream

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Collapse (seed, tags...) into one well-mixed 64-bit stream seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t state = master;
    std::uint64_t out = splitmix64(state);
    for (std::uint64_t t : tags) {
        state ^= t + 0x9E3779B97F4A7C15ULL + (state << 6) + (state >> 2);
        out = splitmix64(state);
    }
    return out;
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    return std::mt19937_64(derive_seed(master, tags));
}

// Beta(a, b) via the two-gamma construction.
inline double beta_draw(std::mt19937_64& eng, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    double x = ga(eng);
    double y = gb(eng);
    double s = x + y;
    return s > 0.0 ? x / s : 0.5;
}

} // namespace kafal
