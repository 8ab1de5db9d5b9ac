#include <doctest.h>

#include "fmseg/metrics.hpp"
#include "testutil.hpp"

using namespace fmseg;
using fmseg::test::random_mask;

namespace {

// brute-force oracle: independent per-pixel loop
ConfusionCounts oracle_counts(const Tensor& pred, const Tensor& mask, real thr) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const bool p = pred[i] >= thr;
        const bool m = mask[i] == 1.0;
        c.tp += (p && m);
        c.fp += (p && !m);
        c.fn += (!p && m);
        c.tn += (!p && !m);
    }
    return c;
}

}  // namespace

TEST_CASE("confusion counts on exact and inverted predictions") {
    Rng rng(4);
    Tensor mask = random_mask(rng, 16, 16);
    ConfusionCounts same = confusion_counts(mask, mask);
    CHECK(same.fp == 0);
    CHECK(same.fn == 0);
    CHECK(same.total() == 256);

    Tensor inverted({16, 16});
    for (std::size_t i = 0; i < mask.size(); ++i) inverted[i] = 1.0 - mask[i];
    ConfusionCounts inv = confusion_counts(inverted, mask);
    CHECK(inv.tp == 0);
    CHECK(inv.tn == 0);
}

TEST_CASE("confusion counts agree with the pixel loop") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor pred({16, 16});
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = rng.uniform(0.0, 1.0);
        Tensor mask = random_mask(rng, 16, 16);
        ConfusionCounts got = confusion_counts(pred, mask);
        ConfusionCounts want = oracle_counts(pred, mask, 0.5);
        CHECK(got.tp == want.tp);
        CHECK(got.fp == want.fp);
        CHECK(got.tn == want.tn);
        CHECK(got.fn == want.fn);
    }
}

TEST_CASE("confusion counts input validation") {
    Tensor pred({4, 4}, 0.5), mask({4, 4}, 1.0), bad({4, 3}, 1.0);
    CHECK_THROWS_AS(confusion_counts(pred, bad), std::invalid_argument);
    Tensor softmask({4, 4}, 0.25);
    CHECK_THROWS_AS(confusion_counts(pred, softmask), std::invalid_argument);
}

TEST_CASE("dice hand cases") {
    CHECK(dice({10, 0, 20, 0}) == 1.0);                       // perfect, nonempty
    CHECK(dice({0, 5, 10, 7}) == 0.0);                        // disjoint, nonempty
    CHECK(dice({0, 0, 16, 0}) == 1.0);                        // both empty
    CHECK(dice({3, 1, 0, 2}) == doctest::Approx(6.0 / 9.0));  // 2/3
}

TEST_CASE("mcc hand cases") {
    CHECK(mcc({5, 0, 7, 0}) == doctest::Approx(1.0));
    CHECK(mcc({0, 7, 0, 5}) == doctest::Approx(-1.0));
    CHECK(mcc({2, 1, 2, 1}) == doctest::Approx(1.0 / 3.0));
    CHECK(mcc({4, 0, 0, 0}) == 0.0);  // empty negative marginals
}

TEST_CASE("mcc symmetry for hard predictions") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor a = random_mask(rng, 8, 8);
        Tensor b = random_mask(rng, 8, 8);
        CHECK(mcc(confusion_counts(a, b)) == doctest::Approx(mcc(confusion_counts(b, a))));
    }
}

TEST_CASE("metric ranges over random masks") {
    Rng rng(15);
    for (int trial = 0; trial < 10000; ++trial) {
        Tensor a = random_mask(rng, 4, 4, rng.uniform(0.0, 1.0));
        Tensor b = random_mask(rng, 4, 4, rng.uniform(0.0, 1.0));
        ConfusionCounts c = confusion_counts(a, b);
        const real d = dice(c);
        const real m = mcc(c);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(m >= -1.0);
        CHECK(m <= 1.0);
    }
}
