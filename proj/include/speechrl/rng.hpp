#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace speechrl {

// splitmix64: used both as a seed deriver and as a stable path hash mixer.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Sub-seed streams derived from the single global run seed. Every stochastic
// component gets its own stream id so one integer reproduces a whole run.
enum class SeedStream : std::uint64_t {
    split = 1,
    init = 2,
    shuffle = 3,
    dropout = 4,
    sample = 5,
    pretrain = 6,
};

inline std::uint64_t derive_seed(std::uint64_t global_seed, SeedStream stream) {
    return splitmix64(global_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(stream));
}

// mt19937_64 wrapper that avoids std::*_distribution, whose output is
// implementation-defined. All draws here are reproducible from the seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

// FNV-1a over bytes; the determinism anchor for dataset splitting.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace speechrl
