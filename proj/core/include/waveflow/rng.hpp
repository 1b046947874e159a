#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace waveflow {

/// Counter-based deterministic RNG. Every draw is a pure function of
/// (key, counter), so streams are reproducible across platforms and can be
/// split per-sample by folding the sample index into the counter.
namespace rng {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stateless draw: a 64-bit word fully determined by (key, counter).
inline std::uint64_t word(std::uint64_t key, std::uint64_t counter) {
    return mix64(mix64(key) ^ (counter * kGolden + 1));
}

/// Uniform double in [0, 1).
inline double uniform(std::uint64_t key, std::uint64_t counter) {
    return static_cast<double>(word(key, counter) >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1] (safe as a log argument).
inline double uniform_pos(std::uint64_t key, std::uint64_t counter) {
    return (static_cast<double>(word(key, counter) >> 11) + 1.0) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; draw index i consumes counters 2i, 2i+1.
inline double normal(std::uint64_t key, std::uint64_t index) {
    const double u1 = uniform_pos(key, 2 * index);
    const double u2 = uniform(key, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline std::vector<double> normal_vec(std::uint64_t key, std::size_t count,
                                      std::uint64_t index_offset = 0) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = normal(key, index_offset + i);
    return out;
}

/// Integer in [0, bound).
inline std::uint64_t below(std::uint64_t key, std::uint64_t counter, std::uint64_t bound) {
    return word(key, counter) % bound;
}

/// Derive a component stream key from a master seed and a component name, so
/// adding a component never shifts any other component's stream.
inline std::uint64_t derive(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return mix64(seed ^ h);
}

inline std::uint64_t derive(std::uint64_t seed, std::string_view name, std::uint64_t n) {
    return mix64(derive(seed, name) ^ (n * kGolden + 0x9E37ull));
}

/// Deterministic in-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, std::uint64_t key) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(below(key, i, i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace rng
}  // namespace waveflow
