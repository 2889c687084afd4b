#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gddcm/config.hpp"

namespace gddcm {

struct EvalSummary {
    double mean_mse = 0.0;
    /// psnr of mean_mse (peak 1).
    double psnr = 0.0;
    /// NaN unless the data dimension is a square image of side >= 8.
    double mean_ssim = 0.0;
    std::uint64_t bits_per_sample = 0;
    std::uint32_t samples = 0;
};

/// Side length when `dim` is a square image usable by ssim, otherwise 0.
Eigen::Index image_side(Eigen::Index dim);

/// Tokenizes every target with codebook seed sample_seed(seed, i) and averages the metrics.
EvalSummary evaluate(const TokenizerConfig& cfg, const std::vector<Vector>& targets, const Denoiser& backend,
                     std::uint64_t seed);

struct SweepRow {
    std::size_t grid_index = 0;
    TokenizerConfig config;
    EvalSummary summary;
    double objective = 0.0;
    /// Empty for successful rows; infeasible rows keep their config and an error tag.
    std::string error;
};

/// Cartesian product of the candidate lists over `base`, in a fixed nesting order.
std::vector<TokenizerConfig> expand_grid(const TokenizerConfig& base, const SweepSpec& spec);

/// Evaluates every grid point on a worker pool and returns rows ranked by objective
/// (ties and error rows ordered by grid index).
std::vector<SweepRow> run_sweep(const TokenizerConfig& base, const SweepSpec& spec,
                                const std::vector<Vector>& targets, const Denoiser& backend, std::uint64_t seed);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace gddcm
