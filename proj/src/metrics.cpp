#include "gddcm/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "gddcm/errors.hpp"

namespace gddcm {

ImageGrid::ImageGrid(Eigen::Index w, Eigen::Index h, Vector px) : width(w), height(h), pixels(std::move(px)) {
    if (w < 1 || h < 1) throw ShapeError("image needs positive width and height");
    if (w * h != pixels.size()) {
        throw ShapeError("image " + std::to_string(w) + "x" + std::to_string(h) + " does not match " +
                         std::to_string(pixels.size()) + " pixels");
    }
    if (!pixels.allFinite()) throw DomainError("image pixels must be finite");
}

double mse(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("mse: dimension mismatch");
    if (a.size() == 0) throw ShapeError("mse: empty input");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double psnr_from_mse(double mse_value, double peak) {
    if (!(mse_value >= 0.0)) throw DomainError("psnr: mse must be non-negative");
    if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse_value);
}

namespace {

void check_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
    if (a.width != b.width || a.height != b.height) throw ShapeError(std::string(what) + ": image shape mismatch");
}

}  // namespace

double psnr(const ImageGrid& a, const ImageGrid& b, double peak) {
    check_same_shape(a, b, "psnr");
    return psnr_from_mse(mse(a.pixels, b.pixels), peak);
}

double ssim(const ImageGrid& a, const ImageGrid& b, double peak) {
    check_same_shape(a, b, "ssim");
    if (std::min(a.width, a.height) < 8) throw DomainError("ssim: image smaller than 8x8");

    constexpr int half = kSsimWindow / 2;
    std::array<double, kSsimWindow> g{};
    for (int k = -half; k <= half; ++k) g[k + half] = std::exp(-(k * k) / (2.0 * kSsimSigma * kSsimSigma));

    const double C1 = (0.01 * peak) * (0.01 * peak);
    const double C2 = (0.03 * peak) * (0.03 * peak);
    double total = 0.0;
    for (Eigen::Index r = 0; r < a.height; ++r) {
        const Eigen::Index r0 = std::max<Eigen::Index>(0, r - half), r1 = std::min(a.height - 1, r + half);
        for (Eigen::Index c = 0; c < a.width; ++c) {
            const Eigen::Index c0 = std::max<Eigen::Index>(0, c - half), c1 = std::min(a.width - 1, c + half);
            double wsum = 0.0, mu_a = 0.0, mu_b = 0.0;
            for (Eigen::Index i = r0; i <= r1; ++i)
                for (Eigen::Index j = c0; j <= c1; ++j) {
                    const double w = g[i - r + half] * g[j - c + half];
                    wsum += w;
                    mu_a += w * a(i, j);
                    mu_b += w * b(i, j);
                }
            mu_a /= wsum;
            mu_b /= wsum;
            // centered second pass
            double var_a = 0.0, var_b = 0.0, cov = 0.0;
            for (Eigen::Index i = r0; i <= r1; ++i)
                for (Eigen::Index j = c0; j <= c1; ++j) {
                    const double w = g[i - r + half] * g[j - c + half];
                    const double da = a(i, j) - mu_a, db = b(i, j) - mu_b;
                    var_a += w * da * da;
                    var_b += w * db * db;
                    cov += w * da * db;
                }
            var_a /= wsum;
            var_b /= wsum;
            cov /= wsum;
            total += ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) /
                     ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2));
        }
    }
    return total / static_cast<double>(a.pixels.size());
}

}  // namespace gddcm
