#include <doctest.h>

#include "fssfda/rng.hpp"
#include "fssfda/tensor.hpp"

using namespace fssfda;

TEST_CASE("rng streams are deterministic and tag-separated") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    CHECK(mix_seed(7, "split") != mix_seed(7, "fewshot"));
    CHECK(mix_seed(7, "split", 0) != mix_seed(7, "split", 1));
    CHECK(mix_seed(7, "split", 3) == mix_seed(7, "split", 3));
}

TEST_CASE("rng bounded draws stay in range and cover values") {
    Rng rng(1);
    std::vector<int> hits(10, 0);
    for (int i = 0; i < 10000; ++i) {
        const int v = rng.below_int(10);
        REQUIRE(v >= 0);
        REQUIRE(v < 10);
        hits[static_cast<std::size_t>(v)]++;
    }
    for (int h : hits) CHECK(h > 800);
}

TEST_CASE("sample_without_replacement returns distinct items") {
    Rng rng(3);
    auto picks = rng.sample_without_replacement(20, 8);
    REQUIRE(picks.size() == 8);
    std::sort(picks.begin(), picks.end());
    for (std::size_t i = 1; i < picks.size(); ++i) CHECK(picks[i] != picks[i - 1]);
    for (int p : picks) {
        CHECK(p >= 0);
        CHECK(p < 20);
    }
}

TEST_CASE("tensor basics") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    t.at(1, 2) = 5.0f;
    CHECK(t[5] == 5.0f);

    Tensor r = t.reshaped({3, 2});
    CHECK(r.dim(0) == 3);
    CHECK(r[5] == 5.0f);
    CHECK_THROWS(t.reshaped({4, 2}));

    Tensor u({2, 3});
    CHECK(max_abs_diff(t, u) == 5.0f);
    CHECK_FALSE(bit_identical(t, u));
    u.at(1, 2) = 5.0f;
    CHECK(bit_identical(t, u));
}
