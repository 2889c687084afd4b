#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gddcm/mixture.hpp"
#include "gddcm/tokenizer.hpp"
#include "gddcm/toy_model.hpp"

namespace gddcm {

enum class Objective : std::uint8_t { Mse, Ssim };

std::string_view to_string(Objective objective) noexcept;
Objective parse_objective(std::string_view name);
std::string_view to_string(SelectionRule rule) noexcept;
SelectionRule parse_selection_rule(std::string_view name);

enum class BackendKind : std::uint8_t { Analytic, Toy };

struct BackendSpec {
    BackendKind kind = BackendKind::Analytic;
    /// Path to a serialized toy model, for BackendKind::Toy.
    std::string model_path;
};

/// Candidate lists for the validation-set search; an empty list keeps the base value.
struct SweepSpec {
    std::vector<double> p;
    std::vector<std::uint32_t> tokens;
    std::vector<std::uint32_t> codebook_size;
    std::vector<double> t_start;
    std::vector<std::uint32_t> P;
    std::vector<double> dt_min;
    std::vector<double> dt_max;
    std::vector<double> rho;
    std::vector<double> sigma_max;
    std::vector<InitStrategy> init;
    Objective objective = Objective::Mse;
    std::uint32_t validation_size = 128;
    unsigned workers = 0;  // 0: hardware concurrency
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    /// codebook.seed is ignored here; per-sample seeds derive from `seed`.
    TokenizerConfig tokenizer;
    std::string data_kind = "prototypes";
    GaussianMixture data = GaussianMixture::prototype_images();
    BackendSpec backend;
    TrainConfig train;
    SweepSpec sweep;
    std::uint32_t dataset_size = 128;
};

/// Strict JSON parse: unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace gddcm
