#include "gddcm/marginal.hpp"

#include <algorithm>
#include <cmath>

namespace gddcm {

namespace {
constexpr double kVeTimeMin = 0.002;
constexpr double kVeTimeMax = 80.0;
constexpr double kFlowTimeMax = 0.999;
constexpr double kDomainSlack = 1e-12;
constexpr double kKnotSnap = 1e-9;
}  // namespace

std::string_view to_string(ModelFamily family) noexcept {
    switch (family) {
        case ModelFamily::DdpmDiscrete: return "ddpm";
        case ModelFamily::VeScore: return "ve";
        case ModelFamily::Consistency: return "consistency";
        case ModelFamily::Flow: return "flow";
    }
    return "unknown";
}

ModelFamily parse_family(std::string_view name) {
    for (auto family : kAllFamilies) {
        if (name == to_string(family)) return family;
    }
    if (name == "DdpmDiscrete") return ModelFamily::DdpmDiscrete;
    if (name == "VeScore") return ModelFamily::VeScore;
    if (name == "Consistency") return ModelFamily::Consistency;
    if (name == "Flow") return ModelFamily::Flow;
    throw ConfigError("unknown model family '" + std::string(name) + "' (expected ddpm, ve, consistency or flow)");
}

// ---------------------------------------------------------------------------
// DiscreteVpSchedule

DiscreteVpSchedule::DiscreteVpSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) throw DomainError("discrete schedule needs at least one step");
    alpha_bar_.resize(betas_.size() + 1);
    log_alpha_bar_.resize(betas_.size() + 1);
    alpha_bar_[0] = 1.0;
    log_alpha_bar_[0] = 0.0;
    for (std::size_t k = 0; k < betas_.size(); ++k) {
        const double beta = betas_[k];
        if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta values must lie in (0, 1)");
        alpha_bar_[k + 1] = alpha_bar_[k] * (1.0 - beta);
        log_alpha_bar_[k + 1] = std::log(alpha_bar_[k + 1]);
    }
}

const DiscreteVpSchedule& DiscreteVpSchedule::standard() {
    static const DiscreteVpSchedule schedule = [] {
        constexpr int kSteps = 1000;
        constexpr double kBetaStart = 1e-4;
        constexpr double kBetaEnd = 0.02;
        std::vector<double> betas(kSteps);
        for (int k = 0; k < kSteps; ++k) {
            betas[static_cast<std::size_t>(k)] = kBetaStart + (kBetaEnd - kBetaStart) * k / (kSteps - 1);
        }
        return DiscreteVpSchedule(std::move(betas));
    }();
    return schedule;
}

double DiscreteVpSchedule::alpha_bar_at(double tau) const {
    const double T = steps();
    if (tau < -kKnotSnap || tau > T + kKnotSnap) throw DomainError("grid position outside [0, T]");
    const double nearest = std::round(tau);
    if (std::abs(tau - nearest) < kKnotSnap) return alpha_bar_[static_cast<std::size_t>(nearest)];
    const auto k = static_cast<std::size_t>(std::floor(tau));
    const double frac = tau - static_cast<double>(k);
    return std::exp(log_alpha_bar_[k] + frac * (log_alpha_bar_[k + 1] - log_alpha_bar_[k]));
}

double DiscreteVpSchedule::log_alpha_bar_slope(double tau) const {
    const int T = steps();
    int k = static_cast<int>(std::floor(tau + kKnotSnap));
    k = std::clamp(k, 0, T - 1);
    return log_alpha_bar_[static_cast<std::size_t>(k + 1)] - log_alpha_bar_[static_cast<std::size_t>(k)];
}

// ---------------------------------------------------------------------------
// MarginalSchedule

MarginalSchedule MarginalSchedule::for_family(ModelFamily family) {
    switch (family) {
        case ModelFamily::VeScore:
        case ModelFamily::Consistency: return MarginalSchedule(family, kVeTimeMin, kVeTimeMax, nullptr);
        case ModelFamily::Flow: return MarginalSchedule(family, 0.0, kFlowTimeMax, nullptr);
        case ModelFamily::DdpmDiscrete:
            return MarginalSchedule(family, 0.0, 1.0, &DiscreteVpSchedule::standard());
    }
    throw DomainError("unknown model family");
}

bool MarginalSchedule::contains(double t) const noexcept {
    return t >= t_min_ - kDomainSlack && t <= t_max_ + kDomainSlack;
}

void MarginalSchedule::check_domain(double t) const {
    if (!std::isfinite(t) || !contains(t)) {
        throw DomainError("t=" + std::to_string(t) + " outside [" + std::to_string(t_min_) + ", " +
                          std::to_string(t_max_) + "] for family " + std::string(to_string(family_)));
    }
}

MarginalCoefficients MarginalSchedule::eval(double t) const {
    check_domain(t);
    t = std::clamp(t, t_min_, t_max_);
    switch (family_) {
        case ModelFamily::VeScore:
        case ModelFamily::Consistency: return {1.0, t, t};
        case ModelFamily::Flow: return {1.0 - t, t / (1.0 - t), t};
        case ModelFamily::DdpmDiscrete: {
            const double alpha_bar = discrete_->alpha_bar_at(t * discrete_->steps());
            const double s = std::sqrt(alpha_bar);
            const double Sigma = std::sqrt(1.0 - alpha_bar);
            return {s, Sigma / s, Sigma};
        }
    }
    throw DomainError("unknown model family");
}

double MarginalSchedule::drift(double t) const {
    check_domain(t);
    t = std::clamp(t, t_min_, t_max_);
    switch (family_) {
        case ModelFamily::VeScore:
        case ModelFamily::Consistency: return 0.0;
        case ModelFamily::Flow: return -1.0 / (1.0 - t);
        case ModelFamily::DdpmDiscrete: {
            const double T = discrete_->steps();
            return 0.5 * discrete_->log_alpha_bar_slope(t * T) * T;
        }
    }
    throw DomainError("unknown model family");
}

double MarginalSchedule::diffusion_sq(double t) const {
    check_domain(t);
    t = std::clamp(t, t_min_, t_max_);
    switch (family_) {
        case ModelFamily::VeScore:
        case ModelFamily::Consistency: return 2.0 * t;
        case ModelFamily::Flow: return 2.0 * t / (1.0 - t);
        case ModelFamily::DdpmDiscrete: {
            const double T = discrete_->steps();
            return -discrete_->log_alpha_bar_slope(t * T) * T;
        }
    }
    throw DomainError("unknown model family");
}

double MarginalSchedule::time_for_noise_std(double target) const {
    double lo = t_min_;
    double hi = t_max_;
    if (target <= noise_std(lo)) return lo;
    if (target >= noise_std(hi)) return hi;
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (noise_std(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double MarginalSchedule::grid_time(int tau) const {
    if (discrete_ == nullptr) throw DomainError("grid_time requires the discrete family");
    if (tau < 0 || tau > discrete_->steps()) throw DomainError("grid position outside [0, T]");
    return static_cast<double>(tau) / discrete_->steps();
}

int MarginalSchedule::grid_position(double t) const {
    if (discrete_ == nullptr) throw DomainError("grid_position requires the discrete family");
    check_domain(t);
    return static_cast<int>(std::lround(t * discrete_->steps()));
}

MarginalCoefficients eval_schedule(ModelFamily family, double t) {
    return MarginalSchedule::for_family(family).eval(t);
}

// ---------------------------------------------------------------------------

PredictionCoefficients prediction_coefficients(ModelFamily family, const MarginalCoefficients& m) {
    switch (family) {
        case ModelFamily::DdpmDiscrete: return {0.0, 1.0};
        case ModelFamily::Consistency: return {1.0, 0.0};
        case ModelFamily::Flow: return {-1.0, 1.0};
        case ModelFamily::VeScore:
            if (!(m.Sigma > 0.0)) throw SingularityError("score output undefined at Sigma(t) = 0");
            return {0.0, -1.0 / m.Sigma};
    }
    throw DomainError("unknown model family");
}

PredictionCoefficients prediction_coefficients(const MarginalSchedule& sched, double t) {
    return prediction_coefficients(sched.family(), sched.eval(t));
}

}  // namespace gddcm
