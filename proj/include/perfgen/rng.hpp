#pragma once

#include <cmath>
#include <cstdint>

namespace perfgen {

/// Deterministic PRNG (xoshiro256++) with an explicit seed. All randomized
/// pipelines draw through this type so runs are bit-reproducible; library
/// code never touches global or implementation-defined generators.
class Rng {
public:
    explicit Rng(uint64_t seed) { reseed(seed); }

    void reseed(uint64_t seed) {
        // splitmix64 expansion of the seed into the full state
        uint64_t x = seed;
        for (auto& si : s_) si = splitmix64(x);
        has_cached_ = false;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(next_u64() % span);
    }

    /// Standard normal draw, Box-Muller (pairs cached).
    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double std) { return mean + std * gaussian(); }

    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Derives an independent stream seed from (seed, key) pairs. Used to key
    /// counter-based noise streams, e.g. per (run seed, reverse step t), so
    /// draws are reproducible and independent of scheduling order.
    static uint64_t derive(uint64_t seed, uint64_t k1, uint64_t k2 = 0) {
        uint64_t x = seed;
        uint64_t h = splitmix64(x);
        x = h ^ (k1 * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
        h = splitmix64(x);
        x = h ^ (k2 * 0xEB44ACCAB455D165ULL + 0x2545F4914F6CDD1DULL);
        return splitmix64(x);
    }

private:
    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t s_[4] = {};
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace perfgen
