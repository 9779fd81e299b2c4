#pragma once

#include <cstdint>

namespace gridmarl {

// splitmix64, used for seeding and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with explicit 64-bit seeding. All draws are bit-identical
// across platforms; no standard-library distributions are used anywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Rejection-free modulo bias is negligible for
    // the n used here (action counts, buffer sizes), but we debias anyway.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Derives an independent stream seed from a master seed and tags such as
// entity id, episode index and phase. Tags are mixed, not XORed directly,
// so adjacent ids do not produce correlated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag_a,
                                 std::uint64_t tag_b = 0, std::uint64_t tag_c = 0) {
    std::uint64_t sm = master;
    std::uint64_t h = splitmix64(sm);
    sm = h ^ (tag_a + 0x9e3779b97f4a7c15ULL);
    h = splitmix64(sm);
    sm = h ^ (tag_b + 0xc2b2ae3d27d4eb4fULL);
    h = splitmix64(sm);
    sm = h ^ (tag_c + 0x165667b19e3779f9ULL);
    return splitmix64(sm);
}

} // namespace gridmarl
