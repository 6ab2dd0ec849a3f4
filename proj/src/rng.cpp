#include "fedgrains/rng.hpp"

#include <cmath>

namespace fedgrains {

std::uint64_t Rng::mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling on the top bits; unbiased and platform-stable.
    const std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
        const std::uint64_t x = next_u64();
        const std::uint64_t limit = 0xFFFFFFFFFFFFFFFFULL - threshold;
        if (x <= limit) return x % n;
    }
}

double Rng::normal() {
    double u1 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

double Rng::gumbel() {
    double u = uniform01();
    if (u < 1e-12) u = 1e-12;
    if (u > 1.0 - 1e-12) u = 1.0 - 1e-12;
    return -std::log(-std::log(u));
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = Rng::mix(master ^ 0xD6E8FEB86659FD93ULL);
    for (std::uint64_t t : tags) {
        h = Rng::mix(h ^ (t + 0x9E3779B97F4A7C15ULL));
    }
    return h;
}

}  // namespace fedgrains
