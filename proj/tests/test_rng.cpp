#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "monas/rng.hpp"

using namespace monas;

TEST_CASE("same seed reproduces the sequence, different seeds diverge") {
    Rng a(123), b(123), c(124);
    bool same = true, diff = false;
    for (int i = 0; i < 100; ++i) {
        uint64_t x = a.next_u64();
        same = same && (x == b.next_u64());
        diff = diff || (x != c.next_u64());
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("uniform01 stays in [0,1) and looks uniform") {
    Rng rng(7);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform_int covers both inclusive endpoints") {
    Rng rng(9);
    std::set<int> seen;
    for (int i = 0; i < 2000; ++i) seen.insert(rng.uniform_int(2, 5));
    CHECK(seen == std::set<int>{2, 3, 4, 5});
}

TEST_CASE("below respects the bound and below(1) is 0") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
    CHECK(rng.below(1) == 0);
    CHECK(rng.below(0) == 0);
}

TEST_CASE("coin at the extremes") {
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(rng.coin(0.0));
        CHECK(rng.coin(1.0));
    }
}

TEST_CASE("normal has the requested moments") {
    Rng rng(17);
    const int n = 40000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal(2.0, 3.0);
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.03));
    CHECK(std::sqrt(var) == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("shuffle permutes without losing elements") {
    Rng rng(19);
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto sorted = v;
    rng.shuffle(v);
    auto copy = v;
    std::sort(copy.begin(), copy.end());
    CHECK(copy == sorted);
}

TEST_CASE("sample_indices returns k distinct in-range indices") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        auto picked = rng.sample_indices(10, 4);
        REQUIRE(picked.size() == 4);
        std::set<int> uniq(picked.begin(), picked.end());
        CHECK(uniq.size() == 4);
        for (int i : picked) {
            CHECK(i >= 0);
            CHECK(i < 10);
        }
    }
}

TEST_CASE("child streams are reproducible and leave the parent untouched") {
    Rng parent(31);
    uint64_t before = Rng(31).next_u64();
    Rng c1 = parent.child(5);
    Rng c2 = parent.child(5);
    Rng c3 = parent.child(6);
    CHECK(c1.next_u64() == c2.next_u64());
    CHECK(c1.next_u64() != c3.next_u64());
    CHECK(parent.next_u64() == before);
}
