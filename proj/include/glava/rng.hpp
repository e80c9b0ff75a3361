#ifndef GLAVA_RNG_HPP
#define GLAVA_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "glava/normal.hpp"

namespace glava {

// SplitMix64 output function. Used to derive independent stream seeds:
// stream r of a base seed gets splitmix_seed(base, r).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t splitmix_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

// Deterministic random source. std::mt19937_64 has a standard-mandated
// sequence, and every derived draw below is defined purely in terms of its
// 64-bit outputs, so results are identical across platforms. Gaussians use
// the inverse-CDF map rather than std::normal_distribution (whose algorithm
// is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on (0,1): 53-bit mantissa, offset by half an ulp so 0 and 1
    // are never returned (required by the inverse-CDF transform).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return normal_quantile(uniform()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double prob) { return uniform() < prob; }

    // +1 or -1 with equal probability.
    double rademacher() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

    // Uniform integer in [0, n) by rejection from the smallest covering
    // power of two; unbiased and reproducible.
    std::uint64_t index(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        std::uint64_t v;
        do {
            v = next_u64() & mask;
        } while (v >= n);
        return v;
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[index(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace glava

#endif  // GLAVA_RNG_HPP
