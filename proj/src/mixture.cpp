#include "gddcm/mixture.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace gddcm {

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("mixture needs at least one component");
    const Eigen::Index d = components_.front().mean.size();
    if (d < 1) throw ConfigError("mixture dimension must be at least 1");
    double total = 0.0;
    for (const auto& c : components_) {
        if (c.mean.size() != d) throw ShapeError("mixture component means differ in dimension");
        if (!(c.var > 0.0) || !std::isfinite(c.var)) throw ConfigError("mixture variances must be positive");
        if (!(c.weight >= 0.0)) throw ConfigError("mixture weights must be non-negative");
        if (!c.mean.allFinite()) throw ConfigError("mixture means must be finite");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
}

Vector GaussianMixture::mean() const {
    Vector m = Vector::Zero(dim());
    for (const auto& c : components_) m += c.weight * c.mean;
    return m;
}

GaussianMixture GaussianMixture::prototype_images() {
    constexpr int n = kPrototypeSide;
    constexpr double span = 2.0 * (n - 1);
    const int corners[4][2] = {{0, 0}, {0, n - 1}, {n - 1, 0}, {n - 1, n - 1}};
    std::vector<MixtureComponent> comps;
    for (const auto& corner : corners) {
        Vector img(n * n);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                img[r * n + c] = 1.0 - (std::abs(r - corner[0]) + std::abs(c - corner[1])) / span;
            }
        }
        comps.push_back({0.25, std::move(img), 0.01});
    }
    return GaussianMixture(std::move(comps));
}

GaussianMixture GaussianMixture::symmetric_pair_2d(const Vector& offset, double var) {
    if (offset.size() != 2) throw ShapeError("symmetric_pair_2d expects a 2-D offset");
    return GaussianMixture({{0.5, offset, var}, {0.5, -offset, var}});
}

GaussianMixture GaussianMixture::single(const Vector& mean, double var) {
    return GaussianMixture({{1.0, mean, var}});
}

Vector gm_sample(const GaussianMixture& mix, CounterRng& rng) {
    const double u = rng.uniform();
    std::size_t pick = mix.size() - 1;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < mix.size(); ++j) {
        cumulative += mix[j].weight;
        if (u < cumulative && mix[j].weight > 0.0) {
            pick = j;
            break;
        }
    }
    while (mix[pick].weight <= 0.0 && pick > 0) --pick;
    const auto& c = mix[pick];
    return c.mean + std::sqrt(c.var) * rng.normal_vector(c.mean.size());
}

namespace {

struct Responsibilities {
    std::vector<double> log_joint;  // log w_j + log N(x; s mu_j, V_j)
    std::vector<double> weights;    // normalized
    double log_marginal;
};

Responsibilities responsibilities(const GaussianMixture& mix, const Vector& x, const MarginalCoefficients& m) {
    if (x.size() != mix.dim()) throw ShapeError("mixture query dimension mismatch");
    const double d = static_cast<double>(mix.dim());
    Responsibilities r;
    r.log_joint.resize(mix.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < mix.size(); ++j) {
        const auto& c = mix[j];
        const double V = m.s * m.s * c.var + m.Sigma * m.Sigma;
        const double sq = (x - m.s * c.mean).squaredNorm();
        r.log_joint[j] = std::log(c.weight) - 0.5 * d * std::log(2.0 * std::numbers::pi * V) - 0.5 * sq / V;
        if (r.log_joint[j] > max_log) max_log = r.log_joint[j];
    }
    if (!std::isfinite(max_log)) throw NumericalUnderflowError("all mixture responsibilities underflowed");
    double sum = 0.0;
    r.weights.resize(mix.size());
    for (std::size_t j = 0; j < mix.size(); ++j) {
        r.weights[j] = std::exp(r.log_joint[j] - max_log);
        sum += r.weights[j];
    }
    for (auto& w : r.weights) w /= sum;
    r.log_marginal = max_log + std::log(sum);
    return r;
}

Vector posterior_x0(const GaussianMixture& mix, const Vector& x, const MarginalCoefficients& m) {
    if (x.size() != mix.dim()) throw ShapeError("mixture query dimension mismatch");
    if (m.Sigma == 0.0) return x / m.s;
    const auto r = responsibilities(mix, x, m);
    Vector mean = Vector::Zero(x.size());
    for (std::size_t j = 0; j < mix.size(); ++j) {
        if (r.weights[j] == 0.0) continue;
        const auto& c = mix[j];
        const double V = m.s * m.s * c.var + m.Sigma * m.Sigma;
        mean += r.weights[j] * (c.mean + (m.s * c.var / V) * (x - m.s * c.mean));
    }
    return mean;
}

}  // namespace

Vector gm_posterior_x0(const GaussianMixture& mix, const Vector& x_t, double t, const MarginalSchedule& sched) {
    return posterior_x0(mix, x_t, sched.eval(t));
}

Vector gm_marginal_score(const GaussianMixture& mix, const Vector& x_t, double t, const MarginalSchedule& sched) {
    const auto m = sched.eval(t);
    const auto r = responsibilities(mix, x_t, m);
    Vector score = Vector::Zero(x_t.size());
    for (std::size_t j = 0; j < mix.size(); ++j) {
        if (r.weights[j] == 0.0) continue;
        const auto& c = mix[j];
        const double V = m.s * m.s * c.var + m.Sigma * m.Sigma;
        score -= r.weights[j] * (x_t - m.s * c.mean) / V;
    }
    return score;
}

double gm_log_marginal(const GaussianMixture& mix, const Vector& x_t, double t, const MarginalSchedule& sched) {
    return responsibilities(mix, x_t, sched.eval(t)).log_marginal;
}

OracleOutput gm_family_output(const GaussianMixture& mix, const Vector& x_t, double t,
                              const MarginalSchedule& sched) {
    const auto m = sched.eval(t);
    OracleOutput out;
    out.x0_mean = posterior_x0(mix, x_t, m);
    out.log_marginal = m.Sigma > 0.0 ? responsibilities(mix, x_t, m).log_marginal
                                     : std::numeric_limits<double>::quiet_NaN();
    if (sched.family() == ModelFamily::Consistency) {
        out.o_t = out.x0_mean;
        return out;
    }
    if (!(m.Sigma > 0.0)) throw SingularityError("implied noise undefined at Sigma(t) = 0");
    const Vector eps = (x_t - m.s * out.x0_mean) / m.Sigma;
    const auto c = prediction_coefficients(sched.family(), m);
    out.o_t = c.h * out.x0_mean + c.w * eps;
    return out;
}

OracleOutput gm_family_output(const GaussianMixture& mix, const Vector& x_t, double t, ModelFamily family) {
    return gm_family_output(mix, x_t, t, MarginalSchedule::for_family(family));
}

Vector AnalyticDenoiser::output(const Vector& x_t, double t) const {
    return gm_family_output(mixture_, x_t, t, schedule_).o_t;
}

}  // namespace gddcm
