#pragma once

#include "gddcm/marginal.hpp"

namespace gddcm {

/// A diffusion model queried by the tokenizer: returns the family's raw output o_t.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual ModelFamily family() const = 0;
    virtual Eigen::Index dim() const = 0;
    virtual Vector output(const Vector& x_t, double t) const = 0;
    /// Data-space anchor used by the anchored initialization strategies.
    virtual Vector anchor() const = 0;
};

}  // namespace gddcm
