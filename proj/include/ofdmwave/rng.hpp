// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_RNG_HPP
#define OFDMWAVE_RNG_HPP

#include <cstdint>
#include <initializer_list>

#include "ofdmwave/common.hpp"

namespace ofdmwave {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and an index path
/// (e.g. {slot, symbol}). Pure function of its inputs, so parallel workers
/// can seed their own streams in any order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = base ^ 0x6a09e667f3bcc909ULL;
    splitmix64(s);
    for (std::uint64_t p : path) {
        s ^= splitmix64(s) ^ (p + 0x9e3779b97f4a7c15ULL);
        splitmix64(s);
    }
    return splitmix64(s);
}

/// xoshiro256** stream with explicit seeding. All distributions are
/// implemented here so sequences are stable across platforms and toolchains.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = -n % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    /// Circularly-symmetric complex Gaussian with E[|z|^2] = variance.
    cplx cnormal(double variance = 1.0) {
        const double s = std::sqrt(variance / 2.0);
        return {s * normal(), s * normal()};
    }

    /// Uniform point on the unit circle.
    cplx unit_circle() {
        const double phi = 2.0 * kPi * uniform01();
        return {std::cos(phi), std::sin(phi)};
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ofdmwave

#endif
