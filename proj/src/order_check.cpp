#include "gddcm/order_check.hpp"

#include <limits>

namespace gddcm {

namespace {
constexpr double kExactMatchNorm = 1e-13;
}

Vector jump_euler_discrepancy(const GaussianMixture& mix, const MarginalSchedule& sched, const Vector& x_t, double t,
                              double dt) {
    const auto m = sched.eval(t);
    StatePair<double> pair;
    pair.x0_hat = gm_posterior_x0(mix, x_t, t, sched);
    pair.eps_hat = (x_t - m.s * pair.x0_hat) / m.Sigma;
    const Vector score = gm_marginal_score(mix, x_t, t, sched);
    return exact_jump_step(pair, t, dt, sched) - ode_euler_step(x_t, t, dt, score, sched);
}

OrderRatio theorem1_order_ratio(const GaussianMixture& mix, const MarginalSchedule& sched, double t, double dt,
                                int trials, std::uint64_t seed) {
    if (trials < 1) throw DomainError("theorem1_order_ratio needs at least one trial");
    detail::check_backward_step(sched, t, dt);
    if (!(sched.noise_std(t) > 0.0)) throw SingularityError("order check needs Sigma(t) > 0");

    CounterRng rng(CounterRng::stream_key(seed, 0x7431));
    OrderRatio result;
    double ratio_sum = 0.0;
    double err_sum = 0.0;
    double half_sum = 0.0;
    for (int k = 0; k < trials; ++k) {
        const Vector x0 = gm_sample(mix, rng);
        const Vector x_t = marginal_forward(x0, rng.normal_vector(mix.dim()), t, sched);
        const double full = jump_euler_discrepancy(mix, sched, x_t, t, dt).norm();
        const double half = jump_euler_discrepancy(mix, sched, x_t, t, 0.5 * dt).norm();
        err_sum += full;
        half_sum += half;
        if (full < kExactMatchNorm && half < kExactMatchNorm) continue;
        ratio_sum += full / half;
        ++result.trials_used;
    }
    result.mean_error = err_sum / trials;
    result.mean_error_half = half_sum / trials;
    if (result.trials_used == 0) {
        result.exact_match = true;
        result.ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
        result.ratio = ratio_sum / result.trials_used;
    }
    return result;
}

}  // namespace gddcm
