#include <doctest.h>

#include <cmath>

#include "fedgrains/rng.hpp"

using namespace fedgrains;

TEST_CASE("rng streams are deterministic and independent per derivation") {
    Rng a(derive_seed(42, {seed_tag::rollout, 1, 2}));
    Rng b(derive_seed(42, {seed_tag::rollout, 1, 2}));
    Rng c(derive_seed(42, {seed_tag::rollout, 2, 1}));
    bool any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t x = a.next_u64();
        CHECK(x == b.next_u64());
        if (x != c.next_u64()) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("uniform01 stays in [0,1) and below() respects the bound") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.below(17) < 17);
    }
}

TEST_CASE("below() is close to uniform") {
    Rng rng(11);
    const int n = 10;
    std::vector<int> counts(n, 0);
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) counts[static_cast<int>(rng.below(n))]++;
    for (int k = 0; k < n; ++k) {
        // 5 sigma around trials/n
        const double expected = static_cast<double>(trials) / n;
        const double sigma = std::sqrt(expected * (1.0 - 1.0 / n));
        CHECK(std::abs(counts[k] - expected) < 5.0 * sigma);
    }
}

TEST_CASE("gumbel of u = e^{-1} is zero and the sample mean approaches Euler-Mascheroni") {
    // -ln(-ln(e^{-1})) = -ln(1) = 0
    CHECK(-std::log(-std::log(std::exp(-1.0))) == doctest::Approx(0.0).epsilon(1e-12));

    Rng rng(123);
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += rng.gumbel();
    CHECK(sum / n == doctest::Approx(0.5772156649).epsilon(0.02));
}

TEST_CASE("shuffle is a permutation and stable across runs") {
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i;
    Rng r1(5), r2(5);
    auto a = v;
    auto b = v;
    r1.shuffle(a);
    r2.shuffle(b);
    CHECK(a == b);
    std::sort(b.begin(), b.end());
    CHECK(b == v);
}
