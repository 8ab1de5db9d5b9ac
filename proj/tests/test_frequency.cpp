#include <doctest.h>

#include <cmath>

#include "fmseg/frequency.hpp"
#include "testutil.hpp"

using namespace fmseg;
using fmseg::test::random_tensor;

namespace {

// independent oracle: direct 2-D convolution with symmetric reflection
Tensor direct_blur(const Tensor& px, const Tensor& kernel, int radius) {
    const std::ptrdiff_t c = px.dim(0), h = px.dim(1), w = px.dim(2);
    auto reflect = [](std::ptrdiff_t i, std::ptrdiff_t n) {
        if (i < 0) return -i - 1;
        if (i >= n) return 2 * n - i - 1;
        return i;
    };
    Tensor out = Tensor::zeros_like(px);
    for (std::ptrdiff_t ch = 0; ch < c; ++ch)
        for (std::ptrdiff_t y = 0; y < h; ++y)
            for (std::ptrdiff_t x = 0; x < w; ++x) {
                real acc = 0.0;
                for (std::ptrdiff_t u = -radius; u <= radius; ++u)
                    for (std::ptrdiff_t v = -radius; v <= radius; ++v)
                        acc += kernel.at(u + radius, v + radius) *
                               px.at(ch, reflect(y + u, h), reflect(x + v, w));
                out.at(ch, y, x) = acc;
            }
    return out;
}

}  // namespace

TEST_CASE("gaussian kernel flat limit") {
    Tensor k = build_gaussian_kernel({1, 1e6});
    REQUIRE(k.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) CHECK(k[i] == doctest::Approx(1.0 / 9.0).epsilon(1e-6));
}

TEST_CASE("gaussian kernel normalization and peak") {
    Tensor k = build_gaussian_kernel({5, 2.0});
    real sum = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) sum += k[i];
    CHECK(std::abs(sum - 1.0) < 1e-9);
    const real center = k.at(5, 5);
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(center >= k[i]);
}

TEST_CASE("gaussian kernel center matches direct summation") {
    // 25-term oracle for (r=2, sigma=1)
    real denom = 0.0;
    for (int u = -2; u <= 2; ++u)
        for (int v = -2; v <= 2; ++v) denom += std::exp(-(u * u + v * v) / 2.0);
    Tensor k = build_gaussian_kernel({2, 1.0});
    CHECK(k.at(2, 2) == doctest::Approx(1.0 / denom).epsilon(1e-12));
}

TEST_CASE("gaussian kernel symmetry") {
    Tensor k = build_gaussian_kernel({3, 1.7});
    const std::size_t n = 7;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) {
            CHECK(k.at(u, v) == k.at(n - 1 - u, v));
            CHECK(k.at(u, v) == k.at(u, n - 1 - v));
            CHECK(k.at(u, v) == k.at(v, u));
        }
}

TEST_CASE("invalid gaussian params rejected") {
    CHECK_THROWS_AS(build_gaussian_kernel({0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_gaussian_kernel({3, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_gaussian_kernel({3, -1.0}), std::invalid_argument);
}

TEST_CASE("constant image maps to zero") {
    Image img(3, 64, 64, 0.7);
    FrequencyView v = high_pass_view(img, {5, 2.0});
    CHECK(max_abs(v.pixels) < 1e-6);
}

TEST_CASE("kernel larger than image rejected") {
    Image img(1, 16, 16, 0.5);
    CHECK_THROWS_AS(high_pass_view(img, {27, 9.0}), std::invalid_argument);
}

TEST_CASE("impulse response equals negated kernel") {
    Image img(1, 32, 32, 0.0);
    img.pixels.at(0, 16, 16) = 1.0;
    const GaussianParams p{2, 1.0};
    Tensor k = build_gaussian_kernel(p);
    FrequencyView v = high_pass_view(img, p);
    CHECK(v.pixels.at(0, 16, 16) == doctest::Approx(1.0 - k.at(2, 2)).epsilon(1e-12));
    for (int u = -2; u <= 2; ++u)
        for (int dv = -2; dv <= 2; ++dv) {
            if (u == 0 && dv == 0) continue;
            CHECK(v.pixels.at(0, 16 + u, 16 + dv) ==
                  doctest::Approx(-k.at(u + 2, dv + 2)).epsilon(1e-12));
        }
}

TEST_CASE("separable blur equals direct 2-D convolution") {
    Rng rng(11);
    Image img(random_tensor(rng, {1, 24, 20}));
    const GaussianParams p{3, 1.4};
    Tensor got = img.pixels - high_pass_view(img, p).pixels;  // the blur itself
    Tensor want = direct_blur(img.pixels, build_gaussian_kernel(p), p.radius);
    CHECK(max_abs(got - want) < 1e-12);
}

TEST_CASE("high pass is linear") {
    Rng rng(5);
    const GaussianParams p{4, 2.5};
    for (int trial = 0; trial < 5; ++trial) {
        Tensor x = random_tensor(rng, {3, 32, 32});
        Tensor y = random_tensor(rng, {3, 32, 32});
        const real a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        Tensor combo = x * a + y * b;
        Tensor lhs = high_pass_view(Image(combo), p).pixels;
        Tensor rhs = high_pass_view(Image(x), p).pixels * a + high_pass_view(Image(y), p).pixels * b;
        CHECK(max_abs(lhs - rhs) < 1e-5);
    }
}

TEST_CASE("view extraction is deterministic") {
    Rng rng(9);
    Image img(random_tensor(rng, {1, 32, 32}));
    FrequencyView a = high_pass_view(img, {6, 3.0});
    FrequencyView b = high_pass_view(img, {6, 3.0});
    CHECK(a.pixels == b.pixels);
}

TEST_CASE("parameter sampling determinism and bounds") {
    Rng a(123), b(123);
    auto pa = sample_view_params(a, 3);
    auto pb = sample_view_params(b, 3);
    REQUIRE(pa.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(pa[i].radius == pb[i].radius);
        CHECK(pa[i].sigma == pb[i].sigma);
    }

    Rng c(77);
    auto many = sample_view_params(c, 1000);
    real mean_r = 0.0;
    for (const GaussianParams& p : many) {
        CHECK(p.radius >= kRadiusMin);
        CHECK(p.radius <= kRadiusMax);
        CHECK(p.sigma >= kSigmaMin);
        CHECK(p.sigma <= kSigmaMax);
        mean_r += p.radius;
    }
    mean_r /= 1000.0;
    CHECK(mean_r > 25.0);
    CHECK(mean_r < 30.0);

    CHECK_THROWS_AS(sample_view_params(c, 1), std::invalid_argument);
}

TEST_CASE("view bank layout") {
    Rng rng(2);
    Image img(random_tensor(rng, {1, 64, 64}));
    std::vector<GaussianParams> perturbed{{10, 4.0}, {20, 8.0}, {30, 12.0}};
    auto bank = extract_view_bank(img, kAnchorParams, perturbed);
    REQUIRE(bank.size() == 4);
    CHECK(bank[0].view_index == 0);
    CHECK(bank[0].params.radius == 27);
    CHECK(bank[0].params.sigma == 9.0);
    for (int n = 1; n <= 3; ++n) CHECK(bank[static_cast<std::size_t>(n)].view_index == n);

    CHECK_THROWS_AS(extract_view_bank(img, kAnchorParams, {}), std::invalid_argument);

    std::vector<GaussianParams> same{kAnchorParams, kAnchorParams};
    auto equal_bank = extract_view_bank(img, kAnchorParams, same);
    CHECK(equal_bank[0].pixels == equal_bank[1].pixels);
    CHECK(equal_bank[0].pixels == equal_bank[2].pixels);
}

TEST_CASE("dc component removed from natural-ish images") {
    Rng rng(31);
    // smooth content away from the border extremes
    Image img(random_tensor(rng, {1, 64, 64}, 0.3, 0.7));
    FrequencyView v = high_pass_view(img, kAnchorParams);
    CHECK(std::abs(mean(v.pixels)) < 1e-3);
}
