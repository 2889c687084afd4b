#include <doctest.h>

#include <cmath>
#include <limits>

#include "gddcm/metrics.hpp"
#include "gddcm/random.hpp"

using namespace gddcm;

namespace {

ImageGrid random_image(std::uint64_t seed, Eigen::Index w = 8, Eigen::Index h = 8) {
    CounterRng rng(seed);
    Vector px(w * h);
    for (Eigen::Index i = 0; i < px.size(); ++i) px[i] = rng.uniform();
    return ImageGrid(w, h, px);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mse") {
    Vector a(2), b(2);
    a << 0, 0;
    b << 1, 1;
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(a, b) == 1.0);
    const auto x = random_image(1).pixels, y = random_image(2).pixels;
    double naive = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) naive += (x[i] - y[i]) * (x[i] - y[i]);
    naive /= static_cast<double>(x.size());
    CHECK(std::abs(mse(x, y) - naive) < 1e-12);
    CHECK(mse(x, y) == mse(y, x));
    CHECK_THROWS_AS(mse(a, Vector::Zero(3)), ShapeError);
    CHECK_THROWS_AS(mse(Vector(), Vector()), ShapeError);
}

TEST_CASE("psnr") {
    CHECK(psnr_from_mse(0.01) == 20.0);
    CHECK(psnr_from_mse(0.0) == std::numeric_limits<double>::infinity());
    CHECK(psnr_from_mse(0.01, 255.0) == doctest::Approx(10 * std::log10(255.0 * 255.0 / 0.01)));
    const auto a = random_image(3), b = random_image(4);
    CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
    CHECK(psnr(a, b) == doctest::Approx(10 * std::log10(1.0 / mse(a.pixels, b.pixels))).epsilon(1e-14));
    CHECK(psnr_from_mse(0.02) < psnr_from_mse(0.01));
    CHECK_THROWS_AS(psnr(a, random_image(5, 9, 9)), ShapeError);
}

TEST_CASE("image grid") {
    CHECK_THROWS(ImageGrid(3, 3, Vector::Zero(8)));
    Vector px(6);
    px << 0, 1, 2, 3, 4, 5;
    const ImageGrid g(3, 2, px);
    CHECK(g(1, 0) == 3.0);
}

TEST_CASE("ssim identities") {
    const auto a = random_image(6);
    CHECK(std::abs(ssim(a, a) - 1.0) <= 1e-9);
    const auto big = random_image(7, 16, 12);
    CHECK(std::abs(ssim(big, big) - 1.0) <= 1e-9);

    // constants: variance terms vanish
    for (auto [c1, c2] : {std::pair{0.2, 0.7}, std::pair{0.0, 1.0}, std::pair{0.5, 0.5}}) {
        const ImageGrid x(8, 8, Vector::Constant(64, c1)), y(8, 8, Vector::Constant(64, c2));
        const double C1 = 0.01 * 0.01;
        const double want = (2 * c1 * c2 + C1) / (c1 * c1 + c2 * c2 + C1);
        CHECK(std::abs(ssim(x, y) - want) <= 1e-9);
    }

    Vector inv = 1.0 - a.pixels.array();
    CHECK(ssim(a, ImageGrid(8, 8, inv)) < 1.0);
    const auto b = random_image(8);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
    for (std::uint64_t s = 10; s < 30; ++s) {
        const double v = ssim(random_image(s), random_image(s + 100));
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(ssim(random_image(1, 7, 7), random_image(2, 7, 7)), DomainError);
    CHECK_THROWS_AS(ssim(a, big), ShapeError);
}

TEST_CASE("ssim matches a direct windowed computation") {
    // independent evaluation: 2-D exponent per tap, accumulated in long double
    const auto a = random_image(40, 9, 8), b = random_image(41, 9, 8);
    const double C1 = 1e-4, C2 = 9e-4;
    long double total = 0;
    for (int r = 0; r < a.height; ++r) {
        for (int c = 0; c < a.width; ++c) {
            long double wsum = 0, ma = 0, mb = 0;
            for (int dr = -5; dr <= 5; ++dr) {
                for (int dc = -5; dc <= 5; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= a.height || cc >= a.width) continue;
                    const long double w = std::exp(-(dr * dr + dc * dc) / (2 * 1.5 * 1.5));
                    wsum += w;
                    ma += w * a(rr, cc);
                    mb += w * b(rr, cc);
                }
            }
            ma /= wsum;
            mb /= wsum;
            long double va = 0, vb = 0, cov = 0;
            for (int dr = -5; dr <= 5; ++dr) {
                for (int dc = -5; dc <= 5; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= a.height || cc >= a.width) continue;
                    const long double w = std::exp(-(dr * dr + dc * dc) / (2 * 1.5 * 1.5)) / wsum;
                    va += w * (a(rr, cc) - ma) * (a(rr, cc) - ma);
                    vb += w * (b(rr, cc) - mb) * (b(rr, cc) - mb);
                    cov += w * (a(rr, cc) - ma) * (b(rr, cc) - mb);
                }
            }
            total += (2 * ma * mb + C1) * (2 * cov + C2) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
        }
    }
    CHECK(std::abs(ssim(a, b) - static_cast<double>(total / (a.width * a.height))) < 1e-12);
}

}  // TEST_SUITE
