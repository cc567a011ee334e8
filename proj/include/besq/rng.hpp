#pragma once

// Seeded, splittable random streams and the variate samplers used by the
// exact transition sampler. Everything here is hand-rolled so that a given
// (seed, stream_id) reproduces the same draws bit-for-bit on any platform,
// which the std:: distributions do not guarantee.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "besq/specfun.hpp"

namespace besq {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace detail

// xoshiro256** seeded through splitmix64 from (seed, stream_id). Streams with
// distinct ids are decorrelated; identical ids replay identical sequences.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id) {
        std::uint64_t sm = seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
        for (auto& word : state_) word = detail::splitmix64(sm);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1)
    double uniform_pos() {
        double u;
        do { u = uniform(); } while (u == 0.0);
        return u;
    }

    // standard normal (Marsaglia polar, spare cached)
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

  private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_, stream_id_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Poisson sampler: Knuth multiplication below mean 10, Hormann's PTRS
// transformed rejection above (O(1) for any mean).
inline long long sample_poisson(double mean, RngStream& rng) {
    if (!(mean >= 0.0)) throw std::domain_error("sample_poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
        const double limit = std::exp(-mean);
        long long k = 0;
        double prod = rng.uniform_pos();
        while (prod > limit) {
            ++k;
            prod *= rng.uniform_pos();
        }
        return k;
    }
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform_pos();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        if (lhs <= kf * log_mean - mean - log_gamma_fn(kf + 1.0))
            return static_cast<long long>(kf);
    }
}

// Unit-scale Gamma(shape) sampler: Marsaglia-Tsang for shape >= 1, boosted by
// U^{1/shape} below 1.
inline double sample_gamma_unit(double shape, RngStream& rng) {
    if (!(shape > 0.0)) throw std::domain_error("sample_gamma_unit: shape must be positive");
    double boost = 1.0;
    if (shape < 1.0) {
        boost = std::pow(rng.uniform_pos(), 1.0 / shape);
        shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z, v;
        do {
            z = rng.normal();
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_pos();
        const double z2 = z * z;
        if (u < 1.0 - 0.0331 * z2 * z2) return boost * d * v;
        if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return boost * d * v;
    }
}

}  // namespace besq
