#include "gddcm/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gddcm {

namespace {

constexpr double kRadicandSlack = 1e-12;
constexpr double kTimeSlack = 1e-12;
constexpr double kFinalSigmaFloor = 1e-3;
constexpr std::uint64_t kRandomSelectionSalt = 0x5E1EC7ED5A17ULL;

bool is_integral(double v) { return std::abs(v - std::round(v)) < 1e-9; }

int grid_steps() { return DiscreteVpSchedule::standard().steps(); }

}  // namespace

std::string_view to_string(InitStrategy init) noexcept {
    switch (init) {
        case InitStrategy::RandomNoise: return "random";
        case InitStrategy::AnchorPlusNoise: return "anchor";
        case InitStrategy::NearestNoise: return "nearest";
    }
    return "unknown";
}

InitStrategy parse_init_strategy(std::string_view name) {
    for (auto init : {InitStrategy::RandomNoise, InitStrategy::AnchorPlusNoise, InitStrategy::NearestNoise}) {
        if (name == to_string(init)) return init;
    }
    throw ConfigError("unknown init strategy '" + std::string(name) + "' (expected random, anchor or nearest)");
}

ContinuousSchedule TokenizerConfig::continuous_schedule() const {
    return {schedule.P, schedule.dt_min, schedule.dt_max, schedule.rho, schedule.sigma_max, tokens};
}

DiscreteSchedule TokenizerConfig::discrete_schedule() const {
    return {schedule.P, static_cast<std::int64_t>(std::llround(schedule.dt_min)), schedule.rho, schedule.sigma_max,
            tokens};
}

void TokenizerConfig::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
    if (tokens < 1) throw ConfigError("token count must be at least 1");
    if (codebook.size < 2) throw ConfigError("codebook size K must be at least 2");
    if (codebook.dim < 1) throw ConfigError("codebook dimension must be at least 1");
    const auto sched = MarginalSchedule::for_family(family);
    if (!std::isfinite(t_start) || !sched.contains(t_start)) throw ConfigError("t_start outside the family's domain");
    if (p > 0.0) {
        if (!std::isfinite(t_end) || !sched.contains(t_end)) throw ConfigError("t_end outside the family's domain");
        if (!(t_end < t_start)) throw ConfigError("p != 0 requires t_end < t_start");
    } else if (final_sample_steps < 1) {
        throw ConfigError("p = 0 requires final_sample_steps >= 1");
    }
    if (family == ModelFamily::DdpmDiscrete) {
        const double T = grid_steps();
        if (!is_integral(t_start * T)) throw ConfigError("discrete family needs t_start on the integer grid");
        if (p > 0.0) {
            if (!is_integral(t_end * T)) throw ConfigError("discrete family needs t_end on the integer grid");
            continuous_schedule().validate();
        } else {
            if (!is_integral(schedule.dt_min) || schedule.dt_min < 1.0) {
                throw ConfigError("discrete family needs an integer dt_min >= 1");
            }
            if (schedule.dt_max != schedule.dt_min + schedule.P) {
                throw ConfigError("discrete family needs dt_max = dt_min + P");
            }
            discrete_schedule().validate();
        }
    } else {
        continuous_schedule().validate();
    }
}

bool operator==(const TokenStream& a, const TokenStream& b) {
    const auto& x = a.config;
    const auto& y = b.config;
    return x.family == y.family && x.p == y.p && x.tokens == y.tokens && x.t_start == y.t_start &&
           x.t_end == y.t_end && x.schedule.P == y.schedule.P && x.schedule.dt_min == y.schedule.dt_min &&
           x.schedule.dt_max == y.schedule.dt_max && x.schedule.rho == y.schedule.rho &&
           x.schedule.sigma_max == y.schedule.sigma_max && x.codebook.seed == y.codebook.seed &&
           x.codebook.size == y.codebook.size && x.init == y.init && a.init_token == b.init_token &&
           a.indices == b.indices;
}

std::uint64_t sample_seed(std::uint64_t global_seed, std::uint64_t sample_index) noexcept {
    return CounterRng::stream_key(global_seed, static_cast<std::int64_t>(sample_index));
}

// ---------------------------------------------------------------------------
// Initialization

namespace {

std::pair<Vector, std::optional<std::uint32_t>> init_with(const TokenizerConfig& cfg, const Vector* target,
                                                          const Vector& anchor,
                                                          std::optional<std::uint32_t> recorded_token) {
    const auto sched = MarginalSchedule::for_family(cfg.family);
    const auto m = sched.eval(cfg.t_start);
    const Eigen::Index d = anchor.size();
    switch (cfg.init) {
        case InitStrategy::RandomNoise:
        case InitStrategy::AnchorPlusNoise: {
            CounterRng rng(CounterRng::stream_key(cfg.codebook.seed, -1));
            const Vector eps = rng.normal_vector(d);
            const Vector base = cfg.init == InitStrategy::RandomNoise ? Vector::Zero(d) : anchor;
            return {m.s * base + m.Sigma * eps, std::nullopt};
        }
        case InitStrategy::NearestNoise: {
            CodebookSpec spec = cfg.codebook;
            spec.dim = d;
            const Codebook book = codebook_for_step(spec, -1);
            std::uint32_t token = 0;
            if (recorded_token) {
                token = *recorded_token;
                if (token >= spec.size) throw CorruptStreamError(0, "init token out of codebook range");
            } else {
                if (target == nullptr) throw ConfigError("nearest-noise initialization needs a target");
                if (target->size() != d) throw ShapeError("init_state: target dimension mismatch");
                token = static_cast<std::uint32_t>(select_noise(book, *target - anchor).index);
            }
            return {m.s * anchor + m.Sigma * book.col(token), token};
        }
    }
    throw ConfigError("unknown init strategy");
}

}  // namespace

std::pair<Vector, std::optional<std::uint32_t>> init_state(const TokenizerConfig& cfg, const Vector* target,
                                                           const Vector& anchor) {
    return init_with(cfg, target, anchor, std::nullopt);
}

// ---------------------------------------------------------------------------
// Steps

std::pair<Vector, double> composite_step(const StatePair<double>& pair, double t, double dt, double p,
                                         const Vector& eps_c, const MarginalSchedule& sched) {
    detail::check_same_size(pair.x0_hat, eps_c, "composite_step");
    detail::check_backward_step(sched, t, dt);
    const double t_next = detail::clamp_time(sched, t - p * dt);
    const auto renoised = sched.eval(t_next);
    const double Sigma_jump = sched.noise_std(detail::clamp_time(sched, t - dt));
    double radicand = renoised.Sigma * renoised.Sigma - Sigma_jump * Sigma_jump;
    if (radicand < -kRadicandSlack) {
        throw ScheduleViolationError("composite step radicand " + std::to_string(radicand) + " is negative");
    }
    radicand = std::max(radicand, 0.0);
    Vector x_next = renoised.s * pair.x0_hat + Sigma_jump * pair.eps_hat + std::sqrt(radicand) * eps_c;
    return {std::move(x_next), t_next};
}

std::pair<Vector, double> unified_step(const Vector& x_t, double t, double dt, double p, const Vector& eps_c,
                                       const Denoiser& backend, const MarginalSchedule& sched) {
    const auto pair = invert_prediction(backend.output(x_t, t), x_t, t, sched);
    return composite_step(pair, t, dt, p, eps_c, sched);
}

double ddim_sigma_bar(int tau_prev, int tau_cur, double p, const DiscreteVpSchedule& vp) {
    if (!(tau_prev < tau_cur)) throw DomainError("discrete step needs tau_prev < tau_cur");
    if (tau_prev < 0 || tau_cur > vp.steps()) throw DomainError("grid position outside [0, T]");
    const double a_prev = vp.sqrt_alpha_bar(tau_prev);
    const double a_cur = vp.sqrt_alpha_bar(tau_cur);
    const double b_prev = vp.sqrt_one_minus_alpha_bar(tau_prev);
    const double b_cur = vp.sqrt_one_minus_alpha_bar(tau_cur);
    const double ratio = a_cur / a_prev;
    return 2.0 * p * (b_prev / b_cur) * std::sqrt(1.0 - ratio * ratio);
}

Vector ddim_codebook_step(const Vector& x_cur, int tau_prev, int tau_cur, double p, const Vector& eps_model,
                          const Vector& noise, const DiscreteVpSchedule& vp) {
    if (x_cur.size() != eps_model.size()) throw ShapeError("ddim_codebook_step: dimension mismatch");
    const double sigma_bar = ddim_sigma_bar(tau_prev, tau_cur, p, vp);
    const double a_prev = vp.sqrt_alpha_bar(tau_prev);
    const double a_cur = vp.sqrt_alpha_bar(tau_cur);
    const double b_prev = vp.sqrt_one_minus_alpha_bar(tau_prev);
    const double b_cur = vp.sqrt_one_minus_alpha_bar(tau_cur);
    const double radicand = b_prev * b_prev - sigma_bar * sigma_bar;
    if (radicand < 0.0) {
        throw ScheduleViolationError("discrete step radicand " + std::to_string(radicand) + " is negative");
    }
    const double eps_coeff = b_cur - (a_cur / a_prev) * std::sqrt(radicand);
    Vector x_prev = (a_prev / a_cur) * (x_cur - eps_coeff * eps_model);
    if (sigma_bar != 0.0) {
        if (noise.size() != x_cur.size()) throw ShapeError("ddim_codebook_step: noise dimension mismatch");
        x_prev += sigma_bar * noise;
    }
    return x_prev;
}

namespace {

StatePair<double> predict(const Denoiser& backend, const MarginalSchedule& sched, const Vector& x, double t) {
    return invert_prediction(backend.output(x, t), x, t, sched);
}

std::vector<int> final_grid_positions(const MarginalSchedule& sched, int tau_start, std::uint32_t steps) {
    const double Sigma0 = sched.noise_std(sched.grid_time(tau_start));
    const double lo = kFinalSigmaFloor * Sigma0;
    std::vector<int> taus{tau_start};
    for (std::uint32_t j = 1; j < steps; ++j) {
        const double target = Sigma0 * std::pow(lo / Sigma0, static_cast<double>(j) / (steps - 1));
        const int tau = sched.grid_position(sched.time_for_noise_std(target));
        if (tau < taus.back() && tau > 0) taus.push_back(tau);
    }
    taus.push_back(0);
    return taus;
}

}  // namespace

Vector final_sample(const Vector& x_t, double t, const Denoiser& backend, std::uint32_t steps) {
    if (steps < 1) throw DomainError("final_sample needs at least one step");
    const auto sched = MarginalSchedule::for_family(backend.family());
    sched.check_domain(t);

    if (const auto* vp = sched.discrete()) {
        const int tau_start = sched.grid_position(t);
        Vector x = x_t;
        if (tau_start == 0) return x;
        const auto taus = final_grid_positions(sched, tau_start, steps);
        const Vector no_noise;
        for (std::size_t j = 0; j + 1 < taus.size(); ++j) {
            const Vector eps = backend.output(x, sched.grid_time(taus[j]));
            x = ddim_codebook_step(x, taus[j + 1], taus[j], 0.0, eps, no_noise, *vp);
        }
        return x;
    }

    const auto m = sched.eval(t);
    if (t <= sched.t_min() + kTimeSlack) {
        if (m.Sigma == 0.0) return x_t / m.s;
        return predict(backend, sched, x_t, t).x0_hat;
    }
    const double Sigma0 = m.Sigma;
    const double lo = std::max(sched.noise_std(sched.t_min()), kFinalSigmaFloor * Sigma0);
    Vector x = x_t;
    double cur = t;
    for (std::uint32_t j = 1; j <= steps; ++j) {
        double next = sched.t_min();
        if (j < steps) {
            const double target = Sigma0 * std::pow(lo / Sigma0, static_cast<double>(j) / (steps - 1));
            next = std::clamp(sched.time_for_noise_std(target), sched.t_min(), cur);
        }
        const auto pair = predict(backend, sched, x, cur);
        x = exact_jump_step(pair, cur, cur - next, sched);
        cur = next;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Tokenization engine shared by tokenize and detokenize.

namespace {

class Engine {
public:
    Engine(const TokenizerConfig& cfg, const Denoiser& backend, const Vector* target,
           const TokenStream* replay, RunOptions options)
        : cfg_(cfg),
          backend_(backend),
          sched_(MarginalSchedule::for_family(cfg.family)),
          target_(target),
          replay_(replay),
          options_(options) {
        spec_ = cfg.codebook;
        spec_.dim = backend.dim();
        stream_.config = cfg;
        stream_.config.codebook.dim = spec_.dim;
        stream_.indices.reserve(cfg.tokens);
    }

    std::pair<TokenStream, ReconstructionResult> run() {
        if (cfg_.p > 0.0) {
            if (sched_.discrete() != nullptr) {
                run_discrete_alg1();
            } else {
                run_continuous_alg1();
            }
        } else {
            run_alg2();
        }
        return {std::move(stream_), std::move(result_)};
    }

private:
    Vector initial_state() {
        const Vector anchor = backend_.anchor();
        std::optional<std::uint32_t> recorded;
        if (replay_ != nullptr && cfg_.init == InitStrategy::NearestNoise) {
            if (!replay_->init_token) throw CorruptStreamError(0, "nearest-noise stream lacks an init token");
            recorded = replay_->init_token;
        }
        auto [x, token] = init_with(cfg_, target_, anchor, recorded);
        stream_.init_token = token;
        return x;
    }

    Vector choose(std::int64_t step, const Vector& x0_hat, double t) {
        const Codebook book = codebook_for_step(spec_, step);
        std::uint32_t index = 0;
        double objective = std::numeric_limits<double>::quiet_NaN();
        if (replay_ != nullptr) {
            index = replay_->indices[static_cast<std::size_t>(step)];
            if (index >= spec_.size) {
                throw CorruptStreamError(0, "token " + std::to_string(step) + " index " + std::to_string(index) +
                                                " exceeds codebook size " + std::to_string(spec_.size));
            }
        } else if (cfg_.selection == SelectionRule::UniformRandom) {
            CounterRng rng(CounterRng::stream_key(cfg_.codebook.seed ^ kRandomSelectionSalt, step));
            index = static_cast<std::uint32_t>(rng.below(spec_.size));
            objective = book.col(index).dot(*target_ - x0_hat);
        } else {
            const auto sel = select_noise(book, *target_ - x0_hat);
            index = static_cast<std::uint32_t>(sel.index);
            objective = sel.objective;
        }
        stream_.indices.push_back(index);
        result_.trace.push_back({t, objective});
        return book.col(index);
    }

    void record(const Vector& x) {
        if (options_.record_states) result_.states.push_back(x);
    }

    std::vector<double> alg1_budgets() const {
        const auto plan = build_step_plan(cfg_.continuous_schedule());
        auto w = plan.expand();
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        const double scale = (cfg_.t_start - cfg_.t_end) / total;
        for (auto& v : w) v *= scale;
        return w;
    }

    void run_continuous_alg1() {
        const auto budgets = alg1_budgets();
        Vector x = initial_state();
        double t = cfg_.t_start;
        for (std::size_t k = 0; k < budgets.size(); ++k) {
            const double dt = budgets[k] / cfg_.p;
            if (t - dt < sched_.t_min() - kTimeSlack) {
                throw ConfigError("schedule infeasible: step " + std::to_string(k) + " would jump from t=" +
                                  std::to_string(t) + " past t_min (dt = w/p = " + std::to_string(dt) + ")");
            }
            const auto pair = predict(backend_, sched_, x, t);
            const Vector eps_c = choose(static_cast<std::int64_t>(k), pair.x0_hat, t);
            std::tie(x, t) = composite_step(pair, t, dt, cfg_.p, eps_c, sched_);
            record(x);
        }
        result_.x_r = std::move(x);
        result_.t_final = t;
    }

    void run_discrete_alg1() {
        const auto budgets = alg1_budgets();
        const auto& vp = *sched_.discrete();
        const double T = vp.steps();
        std::vector<int> taus{sched_.grid_position(cfg_.t_start)};
        double elapsed = 0.0;
        for (std::size_t k = 0; k + 1 < budgets.size(); ++k) {
            elapsed += budgets[k];
            taus.push_back(static_cast<int>(std::lround((cfg_.t_start - elapsed) * T)));
        }
        taus.push_back(sched_.grid_position(cfg_.t_end));
        for (std::size_t k = 0; k + 1 < taus.size(); ++k) {
            if (!(taus[k + 1] < taus[k])) {
                throw ConfigError("schedule infeasible: discrete grid collapses at step " + std::to_string(k) +
                                  " (need t_start - t_end >= N / T)");
            }
        }
        Vector x = initial_state();
        for (std::size_t k = 0; k + 1 < taus.size(); ++k) {
            const double t = sched_.grid_time(taus[k]);
            const Vector eps_model = backend_.output(x, t);
            const auto pair = invert_prediction(eps_model, x, t, sched_);
            const Vector eps_c = choose(static_cast<std::int64_t>(k), pair.x0_hat, t);
            x = ddim_codebook_step(x, taus[k + 1], taus[k], cfg_.p, eps_model, eps_c, vp);
            record(x);
        }
        result_.x_r = std::move(x);
        result_.t_final = sched_.grid_time(taus.back());
    }

    void run_alg2() {
        std::vector<double> dts;
        if (const auto* vp = sched_.discrete()) {
            dts = build_step_plan(cfg_.discrete_schedule()).expand();
            for (auto& dt : dts) dt /= vp->steps();
        } else {
            dts = build_step_plan(cfg_.continuous_schedule()).expand();
        }
        const double t = cfg_.t_start;
        for (const double dt : dts) {
            if (t - dt < sched_.t_min() - kTimeSlack) {
                throw ConfigError("schedule infeasible: dt=" + std::to_string(dt) + " at T_s=" + std::to_string(t) +
                                  " passes t_min");
            }
        }
        Vector x = initial_state();
        for (std::size_t k = 0; k < dts.size(); ++k) {
            const auto pair = predict(backend_, sched_, x, t);
            const Vector eps_c = choose(static_cast<std::int64_t>(k), pair.x0_hat, t);
            x = composite_step(pair, t, dts[k], 0.0, eps_c, sched_).first;
            record(x);
        }
        result_.x_r = final_sample(x, t, backend_, cfg_.final_sample_steps);
        result_.t_final = t;
    }

    const TokenizerConfig& cfg_;
    const Denoiser& backend_;
    MarginalSchedule sched_;
    CodebookSpec spec_;
    const Vector* target_;
    const TokenStream* replay_;
    RunOptions options_;
    TokenStream stream_;
    ReconstructionResult result_;
};

void check_backend(const TokenizerConfig& cfg, const Denoiser& backend) {
    if (backend.family() != cfg.family) {
        throw ConfigError("backend family '" + std::string(to_string(backend.family())) +
                          "' does not match configured family '" + std::string(to_string(cfg.family)) + "'");
    }
}

TokenizerConfig effective_config(TokenizerConfig cfg, const Denoiser& backend) {
    cfg.codebook.dim = backend.dim();
    cfg.validate();
    check_backend(cfg, backend);
    return cfg;
}

}  // namespace

std::pair<TokenStream, ReconstructionResult> tokenize(const TokenizerConfig& cfg, const Vector& target,
                                                      const Denoiser& backend, RunOptions options) {
    return cfg.p > 0.0 ? tokenize_alg1(cfg, target, backend, options) : tokenize_alg2(cfg, target, backend, options);
}

std::pair<TokenStream, ReconstructionResult> tokenize_alg1(const TokenizerConfig& cfg, const Vector& target,
                                                           const Denoiser& backend, RunOptions options) {
    const auto effective = effective_config(cfg, backend);
    if (!(effective.p > 0.0)) throw ConfigError("tokenize_alg1 needs p in (0, 1]");
    if (target.size() != backend.dim()) throw ShapeError("target dimension does not match the backend");
    return Engine(effective, backend, &target, nullptr, options).run();
}

std::pair<TokenStream, ReconstructionResult> tokenize_alg2(const TokenizerConfig& cfg, const Vector& target,
                                                           const Denoiser& backend, RunOptions options) {
    const auto effective = effective_config(cfg, backend);
    if (effective.p != 0.0) throw ConfigError("tokenize_alg2 needs p = 0");
    if (target.size() != backend.dim()) throw ShapeError("target dimension does not match the backend");
    return Engine(effective, backend, &target, nullptr, options).run();
}

ReconstructionResult detokenize(const TokenStream& stream, const Denoiser& backend, DetokenizeOptions options) {
    TokenizerConfig cfg = stream.config;
    cfg.final_sample_steps = options.final_sample_steps;
    cfg.selection = SelectionRule::Argmax;
    const auto effective = effective_config(cfg, backend);
    if (stream.indices.size() != effective.tokens) {
        throw CorruptStreamError(0, "stream holds " + std::to_string(stream.indices.size()) + " indices, header says " +
                                        std::to_string(effective.tokens));
    }
    return Engine(effective, backend, nullptr, &stream, options.run).run().second;
}

}  // namespace gddcm
