#include <doctest.h>

#include <cmath>
#include <limits>

#include "gddcm/codebook.hpp"
#include "gddcm/random.hpp"

using namespace gddcm;

TEST_SUITE("random_codebook") {

TEST_CASE("splitmix finalizer reference values") {
    // first outputs of the reference SplitMix64 generator seeded with 0
    CounterRng rng(0);
    CHECK(rng.word(0) == 0xE220A8397B1DCDAFULL);
    CHECK(rng.word(1) == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.word(2) == 0x06C45D188009454FULL);
    CHECK(CounterRng::mix64(0) == 0);
}

TEST_CASE("stream positions are addressable") {
    CounterRng a(CounterRng::stream_key(42, 3));
    CounterRng b(CounterRng::stream_key(42, 3));
    for (std::uint64_t n = 0; n < 16; ++n) CHECK(a.normal() == b.normal_at(n));
    CounterRng c(CounterRng::stream_key(42, 3));
    c.next_u64();
    CHECK(c.next_u64() == b.word(1));
    CHECK(CounterRng::stream_key(42, 3) != CounterRng::stream_key(42, 4));
    CHECK(CounterRng::stream_key(42, -1) != CounterRng::stream_key(43, -1));
}

TEST_CASE("uniform and below ranges") {
    CounterRng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.below(5) < 5);
    }
}

TEST_CASE("codebook regeneration is bit exact") {
    const CodebookSpec spec{99, 64, 8};
    const Codebook a = codebook_for_step(spec, 5);
    const Codebook b = codebook_for_step(spec, 5);
    CHECK(a.rows() == 8);
    CHECK(a.cols() == 64);
    CHECK((a.array() == b.array()).all());
    CHECK(!(a.array() == codebook_for_step(spec, 6).array()).all());
    // entry k component j is normal number k * dim + j
    CounterRng rng(CounterRng::stream_key(99, 5));
    CHECK(a(3, 10) == rng.normal_at(10 * 8 + 3));
    // a smaller K is a prefix of a larger one
    const Codebook small = codebook_for_step({99, 16, 8}, 5);
    CHECK((small.array() == a.leftCols(16).array()).all());
}

TEST_CASE("codebook moments") {
    const Codebook c = codebook_for_step({1, 4096, 64}, 0);
    const double n = static_cast<double>(c.size());
    const double mean = c.mean();
    const double var = (c.array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("select_noise examples") {
    Codebook c(2, 2);
    c << 1, 0, 0, 1;
    Vector d(2);
    d << 2, 1;
    auto s = select_noise(c, d);
    CHECK(s.index == 0);
    CHECK(s.objective == 2.0);
    CHECK((s.noise.array() == c.col(0).array()).all());
    CHECK(select_noise(c, Vector::Zero(2)).index == 0);
    d << 1, 1;  // tie
    CHECK(select_noise(c, d).index == 0);
}

TEST_CASE("select_noise matches brute force and is scale invariant") {
    for (std::int64_t step = 0; step < 20; ++step) {
        const CodebookSpec spec{3, 256, 8};
        const Codebook c = codebook_for_step(spec, step);
        CounterRng rng(CounterRng::stream_key(1234, step));
        const Vector d = rng.normal_vector(8);
        Eigen::Index best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < c.cols(); ++k) {
            double v = 0.0;
            for (Eigen::Index j = 0; j < 8; ++j) v += c(j, k) * d[j];
            if (v > best_v) {
                best_v = v;
                best = k;
            }
        }
        const auto s = select_noise(c, d);
        CHECK(s.index == best);
        CHECK(s.objective == doctest::Approx(best_v).epsilon(1e-12));
        CHECK(select_noise(c, 3.7 * d).index == best);
        CHECK(select_noise(c, 1e-3 * d).index == best);
    }
}

TEST_CASE("nearest_noise examples") {
    const Codebook c = codebook_for_step({5, 32, 4}, 2);
    const auto s = nearest_noise(c, c.col(7));
    CHECK(s.index == 7);
    CHECK(s.objective == 0.0);
    Codebook two(2, 2);
    two << 1, -1, 0, 0;
    Vector t(2);
    t << 0.9, 0;
    CHECK(nearest_noise(two, t).index == 0);
}

TEST_CASE("inner-product rule agrees with nearest rule above chance") {
    // the rules coincide when entry norms are equal; with Gaussian entries they still agree far above 1/K
    const std::uint32_t K = 16;
    int agree = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        const Codebook c = codebook_for_step({77, K, 8}, i);
        CounterRng rng(CounterRng::stream_key(78, i));
        const Vector target = rng.normal_vector(8);
        agree += select_noise(c, target).index == nearest_noise(c, target).index;
    }
    CHECK(static_cast<double>(agree) / trials > 2.0 / K);
}

TEST_CASE("single-entry codebook") {
    const Codebook c = codebook_for_step({5, 1, 3}, 0);
    CHECK(c.cols() == 1);
    CHECK(select_noise(c, Vector::Ones(3)).index == 0);
}

}  // TEST_SUITE
