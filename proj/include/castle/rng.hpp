#pragma once

#include <cstdint>
#include <vector>

#include "castle/errors.hpp"

namespace castle {

// Deterministic 64-bit generator: xoshiro256** seeded via SplitMix64.
//
// Seeding rule (exact, so any implementation can reproduce the streams):
//   x = seed XOR (0x9E3779B97F4A7C15 * stream)
//   s[i] = splitmix64(x) for i = 0..3, where splitmix64 advances
//     x += 0x9E3779B97F4A7C15
//     z = x; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//     return z ^ (z >> 31)
// Update rule (xoshiro256**):
//   r = rotl(s[1] * 5, 7) * 9
//   t = s[1] << 17
//   s[2]^=s[0]; s[3]^=s[1]; s[1]^=s[2]; s[0]^=s[3]; s[2]^=t; s[3]=rotl(s[3],45)
//
// Identical (seed, stream) pairs produce identical sequences on every platform.
// Gaussian draws use Box-Muller on the uniform stream; both outputs of each
// pair are consumed in order.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    // Uniform draw in [0, 1) with 53 random bits.
    double next_uniform();

    // Single N(mu, sigma^2) draw; the second Box-Muller output is cached.
    double next_gaussian(double mu = 0.0, double sigma = 1.0);

    // n i.i.d. N(mu, sigma^2) draws. sigma == 0 yields n copies of mu
    // without consuming generator state.
    std::vector<double> gaussian(double mu, double sigma, std::size_t n);

    // Uniform integer in [0, bound) by rejection (unbiased).
    std::uint64_t next_below(std::uint64_t bound);

    // Fisher-Yates shuffle driven by this generator.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream; mixes the parent's (seed, stream) with tag.
    Rng fork(std::uint64_t tag) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace castle
