#pragma once

#include <cstdint>
#include <vector>

namespace gddcm {

/// Geometric step lengths with a rho-warped iteration allocation over P + 1 buckets.
struct ContinuousSchedule {
    std::uint32_t P = 4;
    double dt_min = 0.01;
    double dt_max = 0.1;
    double rho = 7.0;
    double sigma_max = 80.0;
    std::uint32_t N = 128;

    void validate() const;
};

/// Integer step lengths dt_min + k, k = 0..P, for the discrete-time family.
struct DiscreteSchedule {
    std::uint32_t P = 4;
    std::int64_t dt_min = 1;
    double rho = 7.0;
    double sigma_max = 80.0;
    std::uint32_t N = 128;

    std::int64_t dt_max() const noexcept { return dt_min + P; }
    void validate() const;
};

struct StepEntry {
    double dt;
    std::uint32_t count;
};

struct StepPlan {
    std::vector<StepEntry> entries;

    std::uint64_t total() const noexcept;
    /// One dt per iteration, in execution order.
    std::vector<double> expand() const;
};

/// dt_min^(k/P) * dt_max^((P-k)/P).
double interval_length(std::uint32_t k, const ContinuousSchedule& sched);

/// floor(weight(k) / sum_{i=0..P} weight(i) * N + 0.5) with
/// weight(x) = (1 + x/P (sigma_max^(1/rho) - 1))^rho.
std::int64_t interval_iterations(std::uint32_t k, const ContinuousSchedule& sched);

/// m_k = P ln(dt_max / (dt_min + k)) / ln(dt_max / dt_min), dt_max = dt_min + P.
double discrete_exponent(std::uint32_t k, std::int64_t dt_min, std::uint32_t P);

/// interval_iterations with m_k in place of k.
std::int64_t discrete_iterations(std::uint32_t k, const DiscreteSchedule& sched);

/// Buckets ordered by decreasing dt; the rounding residual goes to the last
/// (smallest-dt) bucket so the counts sum to N.
StepPlan build_step_plan(const ContinuousSchedule& sched);
StepPlan build_step_plan(const DiscreteSchedule& sched);

}  // namespace gddcm
