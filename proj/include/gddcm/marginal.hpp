#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gddcm/errors.hpp"

namespace gddcm {

using Vector = Eigen::VectorXd;

enum class ModelFamily : std::uint8_t { DdpmDiscrete = 0, VeScore = 1, Consistency = 2, Flow = 3 };

inline constexpr ModelFamily kAllFamilies[] = {ModelFamily::DdpmDiscrete, ModelFamily::VeScore,
                                               ModelFamily::Consistency, ModelFamily::Flow};

std::string_view to_string(ModelFamily family) noexcept;
ModelFamily parse_family(std::string_view name);

/// Discrete variance-preserving schedule: alpha_bar(tau) = prod_{k<=tau} (1 - beta_k),
/// tau in 0..T with alpha_bar(0) = 1.
class DiscreteVpSchedule {
public:
    explicit DiscreteVpSchedule(std::vector<double> betas);

    /// Linear betas from 1e-4 to 0.02 over T = 1000 steps.
    static const DiscreteVpSchedule& standard();

    int steps() const noexcept { return static_cast<int>(betas_.size()); }
    double beta(int k) const { return betas_.at(static_cast<std::size_t>(k - 1)); }
    double alpha_bar(int tau) const { return alpha_bar_.at(static_cast<std::size_t>(tau)); }
    double sqrt_alpha_bar(int tau) const { return std::sqrt(alpha_bar(tau)); }
    double sqrt_one_minus_alpha_bar(int tau) const { return std::sqrt(1.0 - alpha_bar(tau)); }

    /// alpha_bar at fractional position tau, log-linear between integer knots.
    double alpha_bar_at(double tau) const;
    /// d(log alpha_bar)/d(tau) on the knot segment [floor(tau), floor(tau)+1).
    double log_alpha_bar_slope(double tau) const;

private:
    std::vector<double> betas_;
    std::vector<double> alpha_bar_;
    std::vector<double> log_alpha_bar_;
};

struct MarginalCoefficients {
    double s;      // signal scale s(t)
    double sigma;  // sigma(t)
    double Sigma;  // total noise std, s(t) * sigma(t)
};

/// Unified marginal x_t = s(t) x0 + Sigma(t) eps for one model family.
///
/// VeScore and Consistency: s = 1, sigma = Sigma = t on [0.002, 80].
/// Flow: s = 1 - t, Sigma = t on [0, 0.999].
/// DdpmDiscrete: time is normalized, t = tau / T on [0, 1], with
/// s = sqrt(alpha_bar), Sigma = sqrt(1 - alpha_bar).
class MarginalSchedule {
public:
    static MarginalSchedule for_family(ModelFamily family);

    ModelFamily family() const noexcept { return family_; }
    double t_min() const noexcept { return t_min_; }
    double t_max() const noexcept { return t_max_; }
    bool contains(double t) const noexcept;

    /// Throws DomainError when t lies outside [t_min, t_max].
    void check_domain(double t) const;

    MarginalCoefficients eval(double t) const;
    double scale(double t) const { return eval(t).s; }
    double noise_std(double t) const { return eval(t).Sigma; }

    /// f(t) = s'(t) / s(t).
    double drift(double t) const;
    /// g(t)^2 = s(t)^2 d(sigma^2)/dt.
    double diffusion_sq(double t) const;

    /// Time at which Sigma(t) equals `target`, by bisection; clamped to the domain.
    double time_for_noise_std(double target) const;

    /// Non-null for DdpmDiscrete.
    const DiscreteVpSchedule* discrete() const noexcept { return discrete_; }
    /// Normalized time of integer grid position tau (DdpmDiscrete only).
    double grid_time(int tau) const;
    /// Nearest integer grid position of normalized time t (DdpmDiscrete only).
    int grid_position(double t) const;

private:
    MarginalSchedule(ModelFamily family, double t_min, double t_max, const DiscreteVpSchedule* discrete)
        : family_(family), t_min_(t_min), t_max_(t_max), discrete_(discrete) {}

    ModelFamily family_;
    double t_min_;
    double t_max_;
    const DiscreteVpSchedule* discrete_;
};

/// Returns (s, sigma, Sigma) of the family's default schedule at t.
MarginalCoefficients eval_schedule(ModelFamily family, double t);

/// Model output o_t = h x0 + w eps.
struct PredictionCoefficients {
    double h;
    double w;
};

PredictionCoefficients prediction_coefficients(ModelFamily family, const MarginalCoefficients& m);
PredictionCoefficients prediction_coefficients(const MarginalSchedule& sched, double t);

inline constexpr double kSingularThreshold = 1e-12;

template <typename Scalar>
struct StatePair {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x0_hat;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eps_hat;
};

namespace detail {
template <typename A, typename B>
void check_same_size(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, const char* what) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
}
}  // namespace detail

template <typename DerivedX0, typename DerivedEps>
Eigen::Matrix<typename DerivedX0::Scalar, Eigen::Dynamic, 1> marginal_forward(
    const Eigen::MatrixBase<DerivedX0>& x0, const Eigen::MatrixBase<DerivedEps>& eps, double t,
    const MarginalSchedule& sched) {
    using Scalar = typename DerivedX0::Scalar;
    detail::check_same_size(x0, eps, "marginal_forward");
    const auto m = sched.eval(t);
    return Scalar(m.s) * x0 + Scalar(m.Sigma) * eps;
}

/// Solves {o = h x0 + w eps, x = s x0 + Sigma eps} for (x0, eps).
template <typename DerivedO, typename DerivedX>
StatePair<typename DerivedO::Scalar> invert_prediction(const Eigen::MatrixBase<DerivedO>& o_t,
                                                       const Eigen::MatrixBase<DerivedX>& x_t,
                                                       const MarginalCoefficients& m,
                                                       const PredictionCoefficients& c) {
    using Scalar = typename DerivedO::Scalar;
    detail::check_same_size(o_t, x_t, "invert_prediction");
    const double det = m.Sigma * c.h - c.w * m.s;
    if (!(std::abs(det) > kSingularThreshold)) {
        throw SingularityError("invert_prediction: singular system (|D| = " + std::to_string(std::abs(det)) + ")");
    }
    StatePair<Scalar> pair;
    pair.x0_hat = (Scalar(m.Sigma) * o_t - Scalar(c.w) * x_t) / Scalar(det);
    pair.eps_hat = (Scalar(m.s) * o_t - Scalar(c.h) * x_t) / Scalar(-det);
    return pair;
}

template <typename DerivedO, typename DerivedX>
StatePair<typename DerivedO::Scalar> invert_prediction(const Eigen::MatrixBase<DerivedO>& o_t,
                                                       const Eigen::MatrixBase<DerivedX>& x_t, double t,
                                                       const MarginalSchedule& sched) {
    const auto m = sched.eval(t);
    return invert_prediction(o_t, x_t, m, prediction_coefficients(sched.family(), m));
}

/// Model output that an exact predictor would give for (x0, eps) at t.
template <typename DerivedX0, typename DerivedEps>
Eigen::Matrix<typename DerivedX0::Scalar, Eigen::Dynamic, 1> model_output_of(
    const Eigen::MatrixBase<DerivedX0>& x0, const Eigen::MatrixBase<DerivedEps>& eps, double t,
    const MarginalSchedule& sched) {
    using Scalar = typename DerivedX0::Scalar;
    detail::check_same_size(x0, eps, "model_output_of");
    const auto c = prediction_coefficients(sched, t);
    return Scalar(c.h) * x0 + Scalar(c.w) * eps;
}

/// grad log p_t(x_t) = -(x_t - s x0_hat) / Sigma^2.
template <typename DerivedX, typename DerivedX0>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> score_from_prediction(
    const Eigen::MatrixBase<DerivedX>& x_t, const Eigen::MatrixBase<DerivedX0>& x0_hat, double t,
    const MarginalSchedule& sched) {
    using Scalar = typename DerivedX::Scalar;
    detail::check_same_size(x_t, x0_hat, "score_from_prediction");
    const auto m = sched.eval(t);
    if (!(m.Sigma > 0.0)) throw SingularityError("score_from_prediction: Sigma(t) = 0");
    return -(x_t - Scalar(m.s) * x0_hat) / Scalar(m.Sigma * m.Sigma);
}

namespace detail {
inline void check_backward_step(const MarginalSchedule& sched, double t, double dt) {
    sched.check_domain(t);
    if (dt < 0.0) throw DomainError("step duration must be non-negative");
    if (t - dt < sched.t_min() - 1e-12) {
        throw DomainError("step from t=" + std::to_string(t) + " by dt=" + std::to_string(dt) +
                          " passes t_min=" + std::to_string(sched.t_min()));
    }
}
inline double clamp_time(const MarginalSchedule& sched, double t) { return t < sched.t_min() ? sched.t_min() : t; }
}  // namespace detail

/// One explicit Euler step of the probability-flow ODE, backward in time.
template <typename DerivedX, typename DerivedS>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> ode_euler_step(const Eigen::MatrixBase<DerivedX>& x_t,
                                                                           double t, double dt,
                                                                           const Eigen::MatrixBase<DerivedS>& score,
                                                                           const MarginalSchedule& sched) {
    using Scalar = typename DerivedX::Scalar;
    detail::check_same_size(x_t, score, "ode_euler_step");
    detail::check_backward_step(sched, t, dt);
    const double f = sched.drift(t);
    const double g2 = sched.diffusion_sq(t);
    return x_t - (Scalar(f) * x_t - Scalar(0.5 * g2) * score) * Scalar(dt);
}

/// x_{t-dt} = s(t-dt) x0_hat + Sigma(t-dt) eps_hat.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> exact_jump_step(const StatePair<Scalar>& pair, double t, double dt,
                                                         const MarginalSchedule& sched) {
    detail::check_same_size(pair.x0_hat, pair.eps_hat, "exact_jump_step");
    detail::check_backward_step(sched, t, dt);
    const auto m = sched.eval(detail::clamp_time(sched, t - dt));
    return Scalar(m.s) * pair.x0_hat + Scalar(m.Sigma) * pair.eps_hat;
}

}  // namespace gddcm
