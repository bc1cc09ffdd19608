// Deterministic random source. All randomness in the project flows through
// this wrapper so that runs are reproducible bit-for-bit from a seed; the
// std::uniform_* distributions are avoided because their output is
// implementation-defined.
#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>

namespace floodlab {

// SplitMix64 step, used to derive well-separated child seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform double in [0, 1), 53 bits of entropy.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps the stream
    // reproducible and unbiased.
    int uniform_int(int n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return static_cast<int>(v % bound);
    }

    bool bernoulli(double p) { return uniform() < p; }

    void save(std::ostream& os) const { os << gen_; }
    void load(std::istream& is) { is >> gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace floodlab
