#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gddcm/mixture.hpp"
#include "gddcm/tokenizer.hpp"

namespace gddcm {

struct VerificationResult {
    std::string name;
    bool passed = false;
    std::string summary;
};

/// Prototype-image reference: Flow, p = 0, T_s = 0.02, dt in [0.0005, 0.005], K = 256, N = 128.
TokenizerConfig prototype_reference_config();

/// Two well-separated 2-D components at +/-(3, -1.5), var 0.05.
GaussianMixture order_check_mixture();

/// Local-order ratio on the discrete VP schedule at t = 0.8, dt = 0.1, 256 trials; passes in [3.2, 4.8].
VerificationResult verify_theorem1(std::uint64_t seed);

struct MarginalStats {
    double t;
    double p;
    Vector mean, var;                    // empirical, per coordinate
    Vector expected_mean, expected_var;  // closed form at t
    double max_z;                        // largest |deviation| / standard error over mean and var
};

/// Runs `steps` composite steps with fresh normal noise from single-Gaussian data on VE
/// (t0 = 0.5, dt = 0.02) and compares every visited marginal to the closed form.
std::vector<MarginalStats> composite_marginal_stats(double p, std::uint32_t samples, std::uint32_t steps,
                                                    std::uint64_t seed);

/// p in {0, 0.5, 1}, 1e5 samples; passes when every z-score is below 4.
VerificationResult verify_marginal(std::uint64_t seed, std::uint32_t samples = 100000);

struct PairedMse {
    std::vector<double> a, b;
    double mean_a() const;
    double mean_b() const;
    /// mean of a[i] - b[i]
    double mean_difference() const;
    /// fraction of targets with a[i] < b[i]
    double fraction_a_better() const;
};

/// Reconstruction MSE of `a` and `b` on the same targets; target i uses codebook seed sample_seed(seed, i).
PairedMse paired_mse(const TokenizerConfig& a, const TokenizerConfig& b, const std::vector<Vector>& targets,
                     const Denoiser& backend, std::uint64_t seed);

/// Argmax vs uniform-random selection on 64 prototype targets; passes when the paired mean difference is < 0.
VerificationResult verify_selection(std::uint64_t seed);

}  // namespace gddcm
