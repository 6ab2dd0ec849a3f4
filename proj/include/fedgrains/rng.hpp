#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace fedgrains {

// Splittable counter-style generator built on the splitmix64 finalizer.
// Streams derived for distinct (seed, tag...) tuples are independent, which
// keeps parallel client execution bitwise reproducible regardless of
// scheduling. All distribution code is hand-rolled so results are identical
// across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [0,1) with 53 random bits.
    double uniform01();

    // Uniform integer in [0, n), unbiased. n must be > 0.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller.
    double normal();

    // Gumbel(0,1) = -ln(-ln U), U clamped away from {0,1}.
    double gumbel();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static std::uint64_t mix(std::uint64_t x);

private:
    std::uint64_t state_;
};

// Stream tags for seed derivation. Values are arbitrary but fixed: changing
// them changes every downstream random draw.
namespace seed_tag {
inline constexpr std::uint64_t splits = 0x01;
inline constexpr std::uint64_t partition = 0x02;
inline constexpr std::uint64_t overlap_sample = 0x03;
inline constexpr std::uint64_t init_gnn = 0x04;
inline constexpr std::uint64_t init_gfn = 0x05;
inline constexpr std::uint64_t rollout = 0x06;
inline constexpr std::uint64_t synth = 0x07;
}  // namespace seed_tag

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

}  // namespace fedgrains
