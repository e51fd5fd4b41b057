#pragma once

#include <cstdint>
#include <initializer_list>

#include "resque/vec.hpp"

namespace resque {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
    std::uint64_t h = splitmix64(s);
    s ^= b;
    return h ^ splitmix64(s);
}

}  // namespace detail

/// Deterministic xoshiro256++ stream. All randomness in the library flows
/// through this type; substreams are derived from (seed, tag...) so batched
/// work is reproducible regardless of evaluation order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = detail::splitmix64(sm);
    }

    /// Child stream identified by a tag path; independent of draw state.
    Rng child(std::uint64_t tag) const { return Rng(detail::mix(key_, tag)); }

    Rng child(std::initializer_list<std::uint64_t> path) const {
        std::uint64_t k = key_;
        for (std::uint64_t t : path) k = detail::mix(k, t);
        return Rng(k);
    }

    std::uint64_t key() const { return key_; }

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

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Multiply-shift; bias is negligible for the n used here (n << 2^64).
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller (explicit formula, platform-stable).
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    Vec gaussian_vec(std::size_t d, double stddev) {
        Vec x(d);
        for (auto& v : x) v = stddev * normal();
        return x;
    }

    /// Uniform point on the unit sphere in R^d.
    Vec unit_sphere(std::size_t d) {
        Vec x;
        double n = 0.0;
        do {
            x = gaussian_vec(d, 1.0);
            n = norm(x);
        } while (n == 0.0);
        scale(x, 1.0 / n);
        return x;
    }

    /// Geometric draw with success probability 1/2 on support {1, 2, ...}.
    int geometric_half() {
        int j = 1;
        while (uniform() < 0.5) ++j;
        return j;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t key_;
    std::uint64_t s_[4];
};

}  // namespace resque
