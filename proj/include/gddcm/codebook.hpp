#pragma once

#include <cstdint>

#include "gddcm/marginal.hpp"
#include "gddcm/random.hpp"

namespace gddcm {

struct CodebookSpec {
    std::uint64_t seed = 0;
    std::uint32_t size = 256;  // K
    Eigen::Index dim = 1;
};

/// Codebook entries are the columns of a dim x K matrix.
using Codebook = Eigen::MatrixXd;

/// Regenerates the step-i codebook from (seed, i): entry k, component j is
/// normal number k * dim + j of the CounterRng stream keyed stream_key(seed, i).
/// Step -1 is reserved for initialization.
Codebook codebook_for_step(const CodebookSpec& spec, std::int64_t step);

struct NoiseSelection {
    Eigen::Index index = 0;
    Vector noise;
    double objective = 0.0;
};

/// argmax_k <codebook_k, target_diff>; ties go to the lowest index.
NoiseSelection select_noise(const Codebook& codebook, const Vector& target_diff);

/// argmin_k ||codebook_k - eps_target||^2; objective holds the squared distance.
NoiseSelection nearest_noise(const Codebook& codebook, const Vector& eps_target);

}  // namespace gddcm
