#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "gddcm/backend.hpp"
#include "gddcm/codebook.hpp"
#include "gddcm/marginal.hpp"
#include "gddcm/scheduler.hpp"

namespace gddcm {

enum class InitStrategy : std::uint8_t { RandomNoise = 0, AnchorPlusNoise = 1, NearestNoise = 2 };

std::string_view to_string(InitStrategy init) noexcept;
InitStrategy parse_init_strategy(std::string_view name);

/// How the per-step codebook index is chosen while tokenizing.
enum class SelectionRule : std::uint8_t {
    Argmax,         // argmax <eps_c, target - x0_hat>
    UniformRandom,  // ablation baseline
};

struct ScheduleParams {
    std::uint32_t P = 4;
    double dt_min = 0.01;
    double dt_max = 0.1;
    double rho = 7.0;
    double sigma_max = 80.0;
};

struct TokenizerConfig {
    ModelFamily family = ModelFamily::Flow;
    /// Re-noising fraction: t advances by p * dt per iteration; p = 0 stays at t_start.
    double p = 0.0;
    std::uint32_t tokens = 128;
    /// T_r when p > 0, T_s when p = 0. Normalized time (tau / T) for the discrete family.
    double t_start = 0.2;
    /// T_t, used when p > 0.
    double t_end = 0.0;
    /// For the discrete family with p = 0, dt_min is the integer step dt_min_int
    /// and dt_max must equal dt_min + P.
    ScheduleParams schedule;
    CodebookSpec codebook;
    InitStrategy init = InitStrategy::NearestNoise;
    std::uint32_t final_sample_steps = 32;
    SelectionRule selection = SelectionRule::Argmax;

    /// Throws ConfigError on an invalid or infeasible configuration.
    void validate() const;
    ContinuousSchedule continuous_schedule() const;
    DiscreteSchedule discrete_schedule() const;
};

inline constexpr std::uint32_t kNoInitToken = 0xFFFFFFFFu;

struct TokenStream {
    /// Header fields; codebook.dim, final_sample_steps and selection are not serialized.
    TokenizerConfig config;
    std::optional<std::uint32_t> init_token;
    std::vector<std::uint32_t> indices;

    friend bool operator==(const TokenStream& a, const TokenStream& b);
};

struct TraceEntry {
    double t;
    double objective;
};

struct ReconstructionResult {
    Vector x_r;
    /// Time of the last tokenizer state (T_t for p > 0, T_s for p = 0).
    double t_final = 0.0;
    std::vector<TraceEntry> trace;
    /// State after every iteration, when requested.
    std::vector<Vector> states;
};

struct RunOptions {
    bool record_states = false;
};

/// Starting point at t_start. `target` is required for NearestNoise.
std::pair<Vector, std::optional<std::uint32_t>> init_state(const TokenizerConfig& cfg, const Vector* target,
                                                           const Vector& anchor);

/// Composite update from a predicted pair: s(t - p dt) x0 + Sigma(t - dt) eps
/// + sqrt(Sigma(t - p dt)^2 - Sigma(t - dt)^2) eps_c. Returns (x_next, t - p dt).
std::pair<Vector, double> composite_step(const StatePair<double>& pair, double t, double dt, double p,
                                         const Vector& eps_c, const MarginalSchedule& sched);

/// Queries the backend at (x_t, t), inverts its output and applies composite_step.
std::pair<Vector, double> unified_step(const Vector& x_t, double t, double dt, double p, const Vector& eps_c,
                                       const Denoiser& backend, const MarginalSchedule& sched);

/// Noise scale of the discrete codebook step between grid positions tau_prev < tau_cur:
/// 2p (b_prev / b_cur) sqrt(1 - (a_cur / a_prev)^2) with a = sqrt(alpha_bar), b = sqrt(1 - alpha_bar).
double ddim_sigma_bar(int tau_prev, int tau_cur, double p, const DiscreteVpSchedule& vp);

/// Discrete codebook step from tau_cur to tau_prev given the eps-model output.
Vector ddim_codebook_step(const Vector& x_cur, int tau_prev, int tau_cur, double p, const Vector& eps_model,
                          const Vector& noise, const DiscreteVpSchedule& vp);

/// Integrates the probability-flow ODE from t to t_min with `steps` exact jumps on a
/// grid geometric in Sigma; the discrete family uses deterministic discrete steps.
Vector final_sample(const Vector& x_t, double t, const Denoiser& backend, std::uint32_t steps);

/// Per-sample codebook seed derived from a global seed.
std::uint64_t sample_seed(std::uint64_t global_seed, std::uint64_t sample_index) noexcept;

/// Dispatches to tokenize_alg1 (p > 0) or tokenize_alg2 (p = 0).
std::pair<TokenStream, ReconstructionResult> tokenize(const TokenizerConfig& cfg, const Vector& target,
                                                      const Denoiser& backend, RunOptions options = {});
std::pair<TokenStream, ReconstructionResult> tokenize_alg1(const TokenizerConfig& cfg, const Vector& target,
                                                           const Denoiser& backend, RunOptions options = {});
std::pair<TokenStream, ReconstructionResult> tokenize_alg2(const TokenizerConfig& cfg, const Vector& target,
                                                           const Denoiser& backend, RunOptions options = {});

struct DetokenizeOptions {
    std::uint32_t final_sample_steps = 32;
    RunOptions run;
};

/// Replays the tokenizer with the recorded indices; x_r is bit-identical to the tokenizer's.
ReconstructionResult detokenize(const TokenStream& stream, const Denoiser& backend, DetokenizeOptions options = {});

}  // namespace gddcm
