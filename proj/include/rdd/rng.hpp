#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rdd {

// Counter-based SplitMix64 stream. The full generator state is (seed, counter),
// so a stream can be checkpointed and restored from two integers.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), counter_(0) {}

    static Rng restore(uint64_t seed, uint64_t counter) {
        Rng r(seed);
        r.counter_ = counter;
        return r;
    }

    // Derives an independent stream seed from (seed, stream id).
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        return mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
    }

    uint64_t next_u64() {
        ++counter_;
        return mix(seed_ + 0x9E3779B97F4A7C15ULL * counter_);
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Uniform in [0, n). Modulo bias is below 1e-13 for n up to 2^32.
    uint64_t uniform_int(uint64_t n) {
        return next_u64() % n;
    }

    // Standard normal via Box-Muller; consumes exactly two counter ticks.
    double gaussian() {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    uint64_t seed() const { return seed_; }
    uint64_t counter() const { return counter_; }

private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    uint64_t seed_;
    uint64_t counter_;
};

// Stateless deterministic draw for (seed, index) pairs, used where a value must
// be reproducible without tracking a stream (e.g. per-target-per-state samples).
inline uint64_t hash_u64(uint64_t a, uint64_t b) {
    return Rng::derive(a ^ 0x2545F4914F6CDD1DULL, b);
}

}  // namespace rdd
