#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace swamp {

// Counter-based seeding: streams are derived from (master_seed, purpose,
// trial, counter) so parallel trials reproduce bit-identically regardless
// of scheduling. The generator itself is xoshiro256++ with all state words
// produced by splitmix64 over the stream key.

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = detail::splitmix64(s);
    }

    static Rng stream(std::uint64_t master_seed, std::string_view purpose,
                      std::uint64_t trial = 0, std::uint64_t counter = 0) {
        std::uint64_t s = master_seed;
        std::uint64_t k = detail::splitmix64(s) ^ detail::fnv1a(purpose);
        k = k * 0x2545f4914f6cdd1dULL + trial;
        std::uint64_t s2 = k;
        k = detail::splitmix64(s2) + counter * 0x9e3779b97f4a7c15ULL;
        return Rng(k);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // standard normal, Box-Muller (no platform-dependent distribution code)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace swamp
