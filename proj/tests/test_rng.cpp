#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <doctest.h>

#include "arena/rng.hpp"

using namespace arena;

TEST_CASE("derive_seed separates purposes and keys") {
    std::set<std::uint64_t> seeds;
    for (auto purpose : {RngPurpose::Synthesis, RngPurpose::Decompose, RngPurpose::Outcome,
                         RngPurpose::Algorithm, RngPurpose::Tuning}) {
        for (std::uint64_t key : {0ull, 1ull, 2ull, (1ull << 32) | 1ull}) {
            seeds.insert(derive_seed(42, purpose, key));
        }
    }
    CHECK(seeds.size() == 20);  // no collisions across the grid

    CHECK(derive_seed(42, RngPurpose::Outcome, 7) == derive_seed(42, RngPurpose::Outcome, 7));
    CHECK(derive_seed(42, RngPurpose::Outcome, 7) != derive_seed(43, RngPurpose::Outcome, 7));
}

TEST_CASE("identical seeds replay the identical sequence") {
    RandomStream a(0xDEADBEEFull);
    RandomStream b(0xDEADBEEFull);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }

    RandomStream c(1, RngPurpose::Outcome, 5);
    RandomStream d(1, RngPurpose::Outcome, 5);
    for (int i = 0; i < 100; ++i) {
        CHECK(c.uniform() == d.uniform());
        CHECK(c.normal(0.0, 1.0) == d.normal(0.0, 1.0));
    }
}

TEST_CASE("uniform stays in [0, 1) and fills the range") {
    RandomStream rng(11);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("uniform(lo, hi) maps into the requested interval") {
    RandomStream rng(12);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform(2.5, 7.5);
        CHECK(u >= 2.5);
        CHECK(u < 7.5);
    }
}

TEST_CASE("normal matches requested moments") {
    RandomStream rng(13);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(3.0, 2.0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(3.0).epsilon(0.01));
    CHECK(var == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("normal consumes two engine words per draw") {
    RandomStream a(99);
    RandomStream b(99);
    (void)a.normal(0.0, 1.0);
    b.next_u64();
    b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("bernoulli frequency tracks p") {
    RandomStream rng(14);
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3) ? 1 : 0;
    CHECK(static_cast<double>(hits) / n == doctest::Approx(0.3).epsilon(0.02));
    CHECK_FALSE(rng.bernoulli(0.0));  // p = 0 never fires: uniform() < 0 is impossible
}

TEST_CASE("lognormal produces exp(normal)") {
    RandomStream a(7);
    RandomStream b(7);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.lognormal(0.5, 1.25) == std::exp(b.normal(0.5, 1.25)));
    }
}

TEST_CASE("streams with different purposes do not overlap") {
    RandomStream outcome(5, RngPurpose::Outcome, 1);
    RandomStream algo(5, RngPurpose::Algorithm, 1);
    int agree = 0;
    for (int i = 0; i < 64; ++i) {
        if (outcome.next_u64() == algo.next_u64()) ++agree;
    }
    CHECK(agree == 0);
}
