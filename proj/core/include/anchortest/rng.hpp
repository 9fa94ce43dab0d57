#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace anchortest::rng {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for stream `index` under `seed`. Streams are addressed by counter, so a
/// replicate's randomness depends only on (seed, index), never on scheduling.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    for (auto p : path) seed = derive(seed, p);
    return seed;
}

inline Engine stream(std::uint64_t seed, std::uint64_t index) { return Engine(derive(seed, index)); }

}  // namespace anchortest::rng
