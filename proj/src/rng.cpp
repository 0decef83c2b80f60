#include "castle/rng.hpp"

#include <cmath>
#include <numbers>

namespace castle {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += kGolden;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::uint64_t x = seed ^ (kGolden * stream);
    for (auto& s : state_) s = splitmix64(x);
    bool all_zero = true;
    for (auto s : state_) all_zero &= (s == 0);
    if (all_zero) state_[0] = 1; // xoshiro must not start from the zero state
}

std::uint64_t Rng::next_u64() {
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

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian(double mu, double sigma) {
    if (sigma < 0.0) throw ArgumentError("next_gaussian: sigma must be >= 0");
    if (sigma == 0.0) return mu;
    if (has_spare_) {
        has_spare_ = false;
        return mu + sigma * spare_;
    }
    // u1 in (0,1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mu + sigma * r * std::cos(theta);
}

std::vector<double> Rng::gaussian(double mu, double sigma, std::size_t n) {
    if (sigma < 0.0) throw ArgumentError("gaussian: sigma must be >= 0");
    std::vector<double> out(n, mu);
    if (sigma == 0.0) return out;
    for (std::size_t i = 0; i < n; ++i) out[i] = next_gaussian(mu, sigma);
    return out;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
    if (bound == 0) throw ArgumentError("next_below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

Rng Rng::fork(std::uint64_t tag) const {
    std::uint64_t x = stream_ ^ (kGolden * (tag + 1));
    std::uint64_t child = splitmix64(x);
    return Rng(seed_, child);
}

} // namespace castle
