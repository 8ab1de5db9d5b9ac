#include <doctest.h>

#include <set>

#include "fmseg/fmaug.hpp"
#include "testutil.hpp"

using namespace fmseg;
using fmseg::test::random_mask;
using fmseg::test::random_tensor;

TEST_CASE("full-cover patch law gives an all-ones mask") {
    Rng rng(1);
    PatchLaw law;
    law.count_range = {1, 1};
    law.frac_range = {1.0, 1.0};
    MixMask m = generate_mix_mask(rng, 32, 32, law);
    CHECK(m.coverage == 1.0);
    for (std::size_t i = 0; i < m.mask.size(); ++i) CHECK(m.mask[i] == 1.0);
}

TEST_CASE("mask generation determinism") {
    Rng a(99), b(99);
    MixMask ma = generate_mix_mask(a, 48, 40);
    MixMask mb = generate_mix_mask(b, 48, 40);
    CHECK(ma.mask == mb.mask);
    CHECK(ma.coverage == mb.coverage);
}

TEST_CASE("mask coverage over a seed sweep") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        MixMask m = generate_mix_mask(rng, 32, 32);
        CHECK(m.coverage > 0.0);
        CHECK(m.coverage <= 1.0);
        for (std::size_t p = 0; p < m.mask.size(); ++p)
            CHECK((m.mask[p] == 0.0 || m.mask[p] == 1.0));
    }
}

TEST_CASE("degenerate sizes rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(generate_mix_mask(rng, 4, 32), std::invalid_argument);
    CHECK_THROWS_AS(generate_mix_mask(rng, 32, 7), std::invalid_argument);
}

namespace {

FrequencyView as_view(Tensor t) {
    FrequencyView v;
    v.pixels = std::move(t);
    return v;
}

}  // namespace

TEST_CASE("mixing identities") {
    Rng rng(3);
    FrequencyView a = as_view(random_tensor(rng, {3, 16, 16}, -1.0, 1.0));
    FrequencyView b = as_view(random_tensor(rng, {3, 16, 16}, -1.0, 1.0));

    MixMask ones;
    ones.mask = Tensor({16, 16}, 1.0);
    MixMask zeros;
    zeros.mask = Tensor({16, 16}, 0.0);

    CHECK(mix_views(a, b, ones) == a.pixels);
    CHECK(mix_views(a, b, zeros) == b.pixels);

    MixMask m;
    m.mask = random_mask(rng, 16, 16);
    CHECK(mix_views(a, a, m) == a.pixels);
}

TEST_CASE("mask algebra: complementary mixes sum to the inputs") {
    Rng rng(17);
    FrequencyView a = as_view(random_tensor(rng, {1, 16, 16}, -2.0, 2.0));
    FrequencyView b = as_view(random_tensor(rng, {1, 16, 16}, -2.0, 2.0));
    MixMask m;
    m.mask = random_mask(rng, 16, 16);
    Tensor lhs = mix_views(a, b, m) + mix_views(b, a, m);
    CHECK(lhs == a.pixels + b.pixels);
}

TEST_CASE("mixing is selection, not blending") {
    Rng rng(8);
    FrequencyView a = as_view(random_tensor(rng, {1, 16, 16}, -1.0, 1.0));
    FrequencyView b = as_view(random_tensor(rng, {1, 16, 16}, -1.0, 1.0));
    MixMask m;
    m.mask = random_mask(rng, 16, 16);
    Tensor out = mix_views(a, b, m);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] >= std::min(a.pixels[i], b.pixels[i]));
        CHECK(out[i] <= std::max(a.pixels[i], b.pixels[i]));
    }
}

TEST_CASE("mix shape mismatch rejected") {
    Rng rng(2);
    FrequencyView a = as_view(random_tensor(rng, {1, 16, 16}));
    FrequencyView b = as_view(random_tensor(rng, {1, 16, 12}));
    MixMask m;
    m.mask = random_mask(rng, 16, 16);
    CHECK_THROWS_AS(mix_views(a, b, m), std::invalid_argument);
}

TEST_CASE("pair enumeration") {
    auto p3 = enumerate_pairs(3);
    REQUIRE(p3.size() == 6);
    const int want[6][2] = {{1, 2}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 2}};
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(p3[k].i == want[k][0]);
        CHECK(p3[k].j == want[k][1]);
        CHECK(p3[k].k == static_cast<int>(k) + 1);
    }

    CHECK(enumerate_pairs(2).size() == 2);
    CHECK_THROWS_AS(enumerate_pairs(1), std::invalid_argument);

    // brute-force oracle for N = 5
    auto p5 = enumerate_pairs(5);
    std::set<std::pair<int, int>> seen;
    for (const ViewPair& pr : p5) {
        CHECK(pr.i != pr.j);
        CHECK(pr.i >= 1);
        CHECK(pr.i <= 5);
        CHECK(pr.j >= 1);
        CHECK(pr.j <= 5);
        seen.insert({pr.i, pr.j});
    }
    std::size_t expected = 0;
    for (int i = 1; i <= 5; ++i)
        for (int j = 1; j <= 5; ++j)
            if (i != j) ++expected;
    CHECK(p5.size() == expected);
    CHECK(seen.size() == expected);
}

TEST_CASE("training sample construction") {
    Rng rng(21);
    Image img(random_tensor(rng, {1, 64, 64}));
    Tensor mask = random_mask(rng, 64, 64, 0.1);

    Rng sampler(4);
    auto samples = build_training_samples(img, mask, kAnchorParams, sampler, 3);
    REQUIRE(samples.size() == 6);
    for (const AugmentedSample& s : samples) {
        CHECK(s.target.get() == samples[0].target.get());  // literally shared
        CHECK(*s.seg_mask == mask);
        CHECK(s.pair.i != s.pair.j);
    }

    Rng sub_rng(4);
    auto subset = build_training_samples(img, mask, kAnchorParams, sub_rng, 3, 2);
    REQUIRE(subset.size() == 2);
    CHECK((subset[0].pair.i != subset[1].pair.i || subset[0].pair.j != subset[1].pair.j));
}

TEST_CASE("sample counts match brute force for N in [2,6]") {
    Rng rng(6);
    Image img(random_tensor(rng, {1, 64, 64}));
    Tensor mask = random_mask(rng, 64, 64, 0.1);
    for (int n = 2; n <= 6; ++n) {
        Rng sampler(static_cast<std::uint64_t>(n));
        auto samples = build_training_samples(img, mask, kAnchorParams, sampler, n);
        std::size_t brute = 0;
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                if (i != j) ++brute;
        CHECK(samples.size() == brute);
    }
}

TEST_CASE("non-binary segmentation mask rejected") {
    Rng rng(1);
    Image img(random_tensor(rng, {1, 64, 64}));
    Tensor mask({64, 64}, 0.5);
    Rng sampler(1);
    CHECK_THROWS_AS(build_training_samples(img, mask, kAnchorParams, sampler, 3),
                    std::invalid_argument);
}
