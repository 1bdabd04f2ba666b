#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sosnet {

// Deterministic RNG with hand-rolled distributions. std::mt19937_64 is
// bit-specified by the standard; the std distributions are not, so every
// draw here goes through our own mappings to keep outputs identical
// across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform double in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t x = eng_();
            if (x >= threshold) return x % n;
        }
    }

    // Box-Muller, no spare caching: every call consumes exactly two draws.
    double next_normal(double mean, double sigma) {
        double u1 = 1.0 - next_unit();  // (0, 1]
        double u2 = next_unit();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
        return mean + sigma * z;
    }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

    // Uniform permutation of [0, n).
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 eng_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent stream id's derived from one master seed. Used for the
// train streams (init, shuffle, dropout, rop) and per-image synth streams
// so consuming more randomness in one stream never perturbs another.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream_id * 0xD6E8FEB86659FD93ULL + 1));
}

namespace stream {
constexpr std::uint64_t kInit = 1;
constexpr std::uint64_t kShuffle = 2;
constexpr std::uint64_t kDropout = 3;
constexpr std::uint64_t kRopPermutation = 4;
constexpr std::uint64_t kSynthBase = 100;
}  // namespace stream

}  // namespace sosnet
