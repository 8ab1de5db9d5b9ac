#include <doctest.h>

#include "fmseg/rng.hpp"
#include "fmseg/tensor.hpp"
#include "testutil.hpp"

using namespace fmseg;

TEST_CASE("tensor shape and indexing") {
    Tensor t({2, 3, 4}, 1.5);
    CHECK(t.rank() == 3);
    CHECK(t.size() == 24);
    t.at(1, 2, 3) = -2.0;
    CHECK(t[23] == -2.0);

    Tensor a({2, 2}, 1.0), b({2, 2}, 2.0);
    CHECK((a + b)[0] == 3.0);
    CHECK((b - a)[3] == 1.0);
    CHECK(max_abs(a - b) == 1.0);
    CHECK(mean(b) == 2.0);
    CHECK_THROWS_AS(a += Tensor({3}), std::invalid_argument);
}

TEST_CASE("rng determinism and bounds") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.uniform(2.0, 22.0) == b.uniform(2.0, 22.0));
        CHECK(a.uniform_int(5, 50) == b.uniform_int(5, 50));
    }
    Rng c(7);
    for (int i = 0; i < 1000; ++i) {
        double u = c.uniform(-1.0, 1.0);
        CHECK(u >= -1.0);
        CHECK(u < 1.0);
        int k = c.uniform_int(3, 9);
        CHECK(k >= 3);
        CHECK(k <= 9);
    }
}

TEST_CASE("rng fork decorrelates streams") {
    Rng root(1);
    Rng c1 = root.fork(0);
    Rng c2 = root.fork(1);
    CHECK(c1.next_u64() != c2.next_u64());
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<int> w = v;
    Rng a(3), b(3);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::sort(v.begin(), v.end());
    CHECK(v == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}
