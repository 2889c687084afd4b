#pragma once

#include "gddcm/marginal.hpp"

namespace gddcm {

/// Grayscale image, row-major pixels.
struct ImageGrid {
    Eigen::Index width = 0;
    Eigen::Index height = 0;
    Vector pixels;

    ImageGrid() = default;
    ImageGrid(Eigen::Index w, Eigen::Index h, Vector px);

    double operator()(Eigen::Index row, Eigen::Index col) const { return pixels[row * width + col]; }
};

double mse(const Vector& a, const Vector& b);

/// 10 log10(peak^2 / mse); +inf when mse is 0.
double psnr_from_mse(double mse_value, double peak = 1.0);
double psnr(const ImageGrid& a, const ImageGrid& b, double peak = 1.0);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean local SSIM; the Gaussian window is cut at the image border and renormalized.
double ssim(const ImageGrid& a, const ImageGrid& b, double peak = 1.0);

}  // namespace gddcm
