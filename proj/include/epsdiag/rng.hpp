/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace epsdiag {

/// SplitMix64 step. Used both as a PRNG core and as a seed mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over a string, for mixing stage tags into derived seeds.
inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive a per-stage seed from a root seed, a stage tag and a counter.
/// One root seed fans out to independent streams; each stage is
/// reproducible on its own given (root, tag, counter).
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage, std::uint64_t counter = 0) {
    std::uint64_t s = root ^ hash_tag(stage) ^ (counter * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

/// Small deterministic generator. Not std::-distribution based so that
/// streams are bit-identical regardless of standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // burn a step so that seed 0 does not yield the raw mixer constants
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; deterministic and libm-only.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Stateless Gaussian draw addressed by (seed, stream, index, channel).
/// Lets pure functions attach reproducible noise to a sample without
/// carrying generator state.
inline double gaussian_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                          std::uint64_t channel) {
    std::uint64_t s = seed;
    s ^= splitmix64(stream);
    s ^= 0x632be59bd9b4e019ULL * (index + 1);
    s ^= 0xd6e8feb86659fd93ULL * (channel + 1);
    std::uint64_t u64a = splitmix64(s);
    std::uint64_t u64b = splitmix64(s);
    double u1 = static_cast<double>(u64a >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(u64b >> 11) * 0x1.0p-53;
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

} // namespace epsdiag
