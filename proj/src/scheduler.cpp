#include "gddcm/scheduler.hpp"

#include <cmath>
#include <string>

#include "gddcm/errors.hpp"

namespace gddcm {

namespace {

double allocation_weight(double position, std::uint32_t P, double rho, double sigma_max) {
    return std::pow(1.0 + position / P * (std::pow(sigma_max, 1.0 / rho) - 1.0), rho);
}

template <typename PositionFn>
std::int64_t rounded_share(double position, std::uint32_t P, double rho, double sigma_max, std::uint32_t N,
                           PositionFn position_of) {
    double total = 0.0;
    for (std::uint32_t i = 0; i <= P; ++i) total += allocation_weight(position_of(i), P, rho, sigma_max);
    const double share = allocation_weight(position, P, rho, sigma_max) / total * N;
    return static_cast<std::int64_t>(std::floor(share + 0.5));
}

void absorb_residual(StepPlan& plan, std::int64_t raw_total, std::uint32_t N) {
    const std::int64_t residual = static_cast<std::int64_t>(N) - raw_total;
    const std::int64_t last = static_cast<std::int64_t>(plan.entries.back().count) + residual;
    if (last < 0) {
        throw ConfigError("schedule infeasible: rounding residual " + std::to_string(residual) +
                          " would make the final bucket negative");
    }
    plan.entries.back().count = static_cast<std::uint32_t>(last);
}

void check_common(std::uint32_t P, double rho, double sigma_max, std::uint32_t N) {
    if (P < 1) throw ConfigError("schedule needs P >= 1");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("schedule needs rho > 0");
    if (!(sigma_max > 0.0) || !std::isfinite(sigma_max)) throw ConfigError("schedule needs sigma_max > 0");
    if (N < P) throw ConfigError("schedule needs N >= P");
}

}  // namespace

void ContinuousSchedule::validate() const {
    check_common(P, rho, sigma_max, N);
    if (!(dt_min > 0.0) || !(dt_min <= dt_max) || !std::isfinite(dt_max)) {
        throw ConfigError("schedule needs 0 < dt_min <= dt_max");
    }
}

void DiscreteSchedule::validate() const {
    check_common(P, rho, sigma_max, N);
    if (dt_min < 1) throw ConfigError("discrete schedule needs an integer dt_min >= 1");
}

std::uint64_t StepPlan::total() const noexcept {
    std::uint64_t sum = 0;
    for (const auto& e : entries) sum += e.count;
    return sum;
}

std::vector<double> StepPlan::expand() const {
    std::vector<double> steps;
    steps.reserve(total());
    for (const auto& e : entries) steps.insert(steps.end(), e.count, e.dt);
    return steps;
}

double interval_length(std::uint32_t k, const ContinuousSchedule& sched) {
    if (k > sched.P) throw DomainError("interval index outside 0..P");
    const double P = sched.P;
    return std::pow(sched.dt_min, k / P) * std::pow(sched.dt_max, (P - k) / P);
}

std::int64_t interval_iterations(std::uint32_t k, const ContinuousSchedule& sched) {
    if (k > sched.P) throw DomainError("interval index outside 0..P");
    return rounded_share(static_cast<double>(k), sched.P, sched.rho, sched.sigma_max, sched.N,
                         [](std::uint32_t i) { return static_cast<double>(i); });
}

double discrete_exponent(std::uint32_t k, std::int64_t dt_min, std::uint32_t P) {
    if (dt_min < 1) throw DomainError("discrete_exponent needs dt_min >= 1");
    if (P == 0) throw DomainError("discrete_exponent: dt_max equals dt_min (P = 0)");
    if (k > P) throw DomainError("interval index outside 0..P");
    const double lo = static_cast<double>(dt_min);
    const double hi = lo + P;
    return P * std::log(hi / (lo + k)) / std::log(hi / lo);
}

std::int64_t discrete_iterations(std::uint32_t k, const DiscreteSchedule& sched) {
    if (k > sched.P) throw DomainError("interval index outside 0..P");
    return rounded_share(discrete_exponent(k, sched.dt_min, sched.P), sched.P, sched.rho, sched.sigma_max, sched.N,
                         [&](std::uint32_t i) { return discrete_exponent(i, sched.dt_min, sched.P); });
}

StepPlan build_step_plan(const ContinuousSchedule& sched) {
    sched.validate();
    StepPlan plan;
    std::int64_t raw_total = 0;
    for (std::uint32_t k = 0; k <= sched.P; ++k) {
        const std::int64_t count = interval_iterations(k, sched);
        raw_total += count;
        plan.entries.push_back({interval_length(k, sched), static_cast<std::uint32_t>(count)});
    }
    absorb_residual(plan, raw_total, sched.N);
    return plan;
}

StepPlan build_step_plan(const DiscreteSchedule& sched) {
    sched.validate();
    StepPlan plan;
    std::int64_t raw_total = 0;
    for (std::uint32_t j = 0; j <= sched.P; ++j) {
        const std::uint32_t k = sched.P - j;
        const std::int64_t count = discrete_iterations(k, sched);
        raw_total += count;
        plan.entries.push_back({static_cast<double>(sched.dt_min + k), static_cast<std::uint32_t>(count)});
    }
    absorb_residual(plan, raw_total, sched.N);
    return plan;
}

}  // namespace gddcm
