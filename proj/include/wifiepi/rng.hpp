#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace wifiepi {

// Seeded PRNG for reproducible simulation. xoshiro256++ core seeded through
// splitmix64, with hand-rolled uniform/bernoulli/shuffle helpers so that the
// byte stream of every output file depends only on the seed, never on the
// standard library implementation.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed) {
        uint64_t s = seed;
        for (auto& w : state_) w = splitmix(s);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform double in [a, b).
    double uniform(double a, double b) { return a + uniform01() * (b - a); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n); n must be positive.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<__uint128_t>(next()) * static_cast<__uint128_t>(n)) >> 64);
    }

    // Standard normal via Box-Muller. Two draws per sample, no cached state.
    double normal() {
        double u1 = 1.0 - uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // satisfies std::uniform_random_bit_generator
    using result_type = uint64_t;
    static constexpr uint64_t min() { return 0; }
    static constexpr uint64_t max() { return ~uint64_t{0}; }
    uint64_t operator()() { return next(); }

private:
    static uint64_t splitmix(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4];
};

// Stream labels for deriving independent substreams from one master seed.
enum class StreamKind : uint64_t {
    Layout = 1,       // position randomization + profile assignment, per layout
    Run = 2,          // seed placement + attack dynamics, per (layout, run)
    Synth = 3,        // synthetic corpus generation
    Immunization = 4, // random immune-set permutation, per layout
};

// Derives a reproducible substream of `master`. Streams with distinct
// (kind, a, b) labels are independent for all practical purposes.
inline Rng substream(uint64_t master, StreamKind kind, uint64_t a = 0, uint64_t b = 0) {
    auto mix = [](uint64_t h, uint64_t v) {
        uint64_t z = h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    uint64_t s = mix(master, static_cast<uint64_t>(kind));
    s = mix(s, a);
    s = mix(s, b);
    return Rng(s);
}

} // namespace wifiepi
