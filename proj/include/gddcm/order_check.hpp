#pragma once

#include <cstdint>

#include "gddcm/mixture.hpp"

namespace gddcm {

/// Exact-jump minus probability-flow Euler step, both taken from x_t with the
/// mixture's exact posterior mean and exact score.
Vector jump_euler_discrepancy(const GaussianMixture& mix, const MarginalSchedule& sched, const Vector& x_t, double t,
                              double dt);

struct OrderRatio {
    /// Every trial had both discrepancies below 1e-13; `ratio` is then NaN.
    bool exact_match = false;
    double ratio = 0.0;
    double mean_error = 0.0;       // mean ||Delta(dt)||
    double mean_error_half = 0.0;  // mean ||Delta(dt/2)||
    int trials_used = 0;
};

/// Mean of ||Delta(dt)|| / ||Delta(dt/2)|| over `trials` states drawn from the
/// marginal at t. A second-order local discrepancy gives a ratio near 4.
OrderRatio theorem1_order_ratio(const GaussianMixture& mix, const MarginalSchedule& sched, double t, double dt,
                                int trials, std::uint64_t seed = 0);

}  // namespace gddcm
