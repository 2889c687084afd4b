#include "gddcm/verify.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "gddcm/dataset.hpp"
#include "gddcm/metrics.hpp"
#include "gddcm/order_check.hpp"

namespace gddcm {

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

constexpr double kMarginalT0 = 0.5;
constexpr double kMarginalDt = 0.02;
constexpr double kMarginalVar = 0.25;

}  // namespace

TokenizerConfig prototype_reference_config() {
    TokenizerConfig cfg;
    cfg.family = ModelFamily::Flow;
    cfg.p = 0.0;
    cfg.tokens = 128;
    cfg.t_start = 0.02;
    cfg.schedule = {4, 0.0005, 0.005, 7.0, 80.0};
    cfg.codebook = {0, 256, 64};
    cfg.init = InitStrategy::NearestNoise;
    cfg.final_sample_steps = 32;
    return cfg;
}

GaussianMixture order_check_mixture() {
    Vector offset(2);
    offset << 3.0, -1.5;
    return GaussianMixture::symmetric_pair_2d(offset, 0.05);
}

VerificationResult verify_theorem1(std::uint64_t seed) {
    const auto sched = MarginalSchedule::for_family(ModelFamily::DdpmDiscrete);
    const auto r = theorem1_order_ratio(order_check_mixture(), sched, 0.8, 0.1, 256, seed);
    VerificationResult out{"theorem1", !r.exact_match && r.ratio >= 3.2 && r.ratio <= 4.8, ""};
    out.summary = fmt("ratio %.4f over %g trials (band [3.2, 4.8]); mean error %.3e", r.ratio, r.trials_used,
                      r.mean_error);
    return out;
}

std::vector<MarginalStats> composite_marginal_stats(double p, std::uint32_t samples, std::uint32_t steps,
                                                    std::uint64_t seed) {
    if (samples < 2) throw DomainError("need at least two samples");
    Vector mu(2);
    mu << 0.5, -0.3;
    const auto mix = GaussianMixture::single(mu, kMarginalVar);
    const auto sched = MarginalSchedule::for_family(ModelFamily::VeScore);
    const AnalyticDenoiser oracle(mix, ModelFamily::VeScore);

    std::vector<Vector> xs(samples);
    for (std::uint32_t i = 0; i < samples; ++i) {
        CounterRng rng(CounterRng::stream_key(seed, i));
        const Vector x0 = gm_sample(mix, rng);
        xs[i] = marginal_forward(x0, rng.normal_vector(2), kMarginalT0, sched);
    }

    std::vector<MarginalStats> out;
    double t = kMarginalT0;
    for (std::uint32_t k = 0; k < steps; ++k) {
        double t_next = t;
        for (std::uint32_t i = 0; i < samples; ++i) {
            CounterRng rng(CounterRng::stream_key(seed ^ 0xC0FFEEULL, static_cast<std::int64_t>(k) * samples + i));
            std::tie(xs[i], t_next) = unified_step(xs[i], t, kMarginalDt, p, rng.normal_vector(2), oracle, sched);
        }
        t = t_next;
        MarginalStats st;
        st.t = t;
        st.p = p;
        st.mean = Vector::Zero(2);
        for (const auto& x : xs) st.mean += x;
        st.mean /= samples;
        st.var = Vector::Zero(2);
        Vector m4 = Vector::Zero(2);
        for (const auto& x : xs) {
            const Vector d2 = (x - st.mean).array().square();
            st.var += d2;
            m4 += d2.cwiseProduct(d2);
        }
        st.var /= (samples - 1);
        m4 /= samples;
        const auto m = sched.eval(t);
        st.expected_mean = m.s * mu;
        st.expected_var = Vector::Constant(2, m.s * m.s * kMarginalVar + m.Sigma * m.Sigma);
        st.max_z = 0.0;
        for (Eigen::Index j = 0; j < 2; ++j) {
            const double se_mean = std::sqrt(st.expected_var[j] / samples);
            const double se_var = std::sqrt((m4[j] - st.var[j] * st.var[j]) / samples);
            st.max_z = std::max(st.max_z, std::abs(st.mean[j] - st.expected_mean[j]) / se_mean);
            st.max_z = std::max(st.max_z, std::abs(st.var[j] - st.expected_var[j]) / se_var);
        }
        out.push_back(std::move(st));
    }
    return out;
}

VerificationResult verify_marginal(std::uint64_t seed, std::uint32_t samples) {
    VerificationResult out{"marginal", true, ""};
    double worst = 0.0;
    for (double p : {0.0, 0.5, 1.0}) {
        for (const auto& st : composite_marginal_stats(p, samples, 3, seed)) {
            worst = std::max(worst, st.max_z);
            if (st.max_z >= 4.0) out.passed = false;
        }
    }
    out.summary = fmt("worst z-score %.3f over p in {0, 0.5, 1}, 3 steps each (limit 4)", worst);
    return out;
}

double PairedMse::mean_a() const {
    double s = 0.0;
    for (double v : a) s += v;
    return s / static_cast<double>(a.size());
}

double PairedMse::mean_b() const {
    double s = 0.0;
    for (double v : b) s += v;
    return s / static_cast<double>(b.size());
}

double PairedMse::mean_difference() const {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] - b[i];
    return s / static_cast<double>(a.size());
}

double PairedMse::fraction_a_better() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a[i] < b[i];
    return static_cast<double>(n) / static_cast<double>(a.size());
}

PairedMse paired_mse(const TokenizerConfig& a, const TokenizerConfig& b, const std::vector<Vector>& targets,
                     const Denoiser& backend, std::uint64_t seed) {
    PairedMse out;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (auto [cfg, sink] : {std::pair{a, &out.a}, std::pair{b, &out.b}}) {
            cfg.codebook.seed = sample_seed(seed, i);
            sink->push_back(mse(tokenize(cfg, targets[i], backend).second.x_r, targets[i]));
        }
    }
    return out;
}

VerificationResult verify_selection(std::uint64_t seed) {
    const auto data = GaussianMixture::prototype_images();
    const AnalyticDenoiser backend(data, ModelFamily::Flow);
    const auto targets = generate_dataset(data, 64, seed);
    auto argmax = prototype_reference_config();
    auto random = argmax;
    random.selection = SelectionRule::UniformRandom;
    const auto r = paired_mse(argmax, random, targets, backend, seed);
    VerificationResult out{"selection", r.mean_difference() < 0.0, ""};
    out.summary = fmt("mean MSE argmax %.4e vs random %.4e; paired difference %.4e", r.mean_a(), r.mean_b(),
                      r.mean_difference());
    return out;
}

}  // namespace gddcm
