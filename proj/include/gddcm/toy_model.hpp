#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gddcm/backend.hpp"
#include "gddcm/mixture.hpp"

namespace gddcm {

struct TrainConfig {
    std::uint64_t steps = 5000;
    std::uint32_t batch = 64;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    // loss curve sampling: a fixed held-out batch evaluated every `monitor_every` steps
    std::uint32_t monitor_every = 10;
    std::uint32_t monitor_batch = 256;

    void validate() const;
};

struct LossPoint {
    std::uint64_t step;
    double loss;
};

/// Two tanh hidden layers over [x, t / t_max].
class ToyDenoiser final : public Denoiser {
public:
    static constexpr Eigen::Index kWidth = 64;

    /// All weights and biases zero.
    ToyDenoiser(ModelFamily family, Eigen::Index dim);

    ModelFamily family() const override { return family_; }
    Eigen::Index dim() const override { return W3.rows(); }
    Vector output(const Vector& x_t, double t) const override;
    Vector anchor() const override { return anchor_; }

    void set_anchor(const Vector& anchor);
    double time_scale() const noexcept { return time_scale_; }

    /// Batched forward pass: columns of `x` are states, `t` holds one time per column.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, const Eigen::VectorXd& t) const;

    const std::vector<LossPoint>& loss_curve() const noexcept { return loss_curve_; }

    Eigen::MatrixXd W1, W2, W3;
    Vector b1, b2, b3;

private:
    friend ToyDenoiser train_model(const GaussianMixture&, const TrainConfig&, ModelFamily);

    ModelFamily family_;
    double time_scale_;
    Vector anchor_;
    std::vector<LossPoint> loss_curve_;
};

Vector toy_forward(const ToyDenoiser& model, const Vector& x_t, double t);

/// SGD on the eps-prediction loss under the discrete VP schedule.
ToyDenoiser train_epsilon(const GaussianMixture& data, const TrainConfig& cfg);

/// SGD on the conditional flow-matching loss with target -x0 + eps, path (1-t) x0 + t eps.
ToyDenoiser train_flow(const GaussianMixture& data, const TrainConfig& cfg);

ToyDenoiser train_model(const GaussianMixture& data, const TrainConfig& cfg, ModelFamily family);

/// Monitored loss before the first update.
double initial_loss(const ToyDenoiser& model);
/// Mean monitored loss over the last `fraction` of the curve.
double final_loss(const ToyDenoiser& model, double fraction = 0.02);

/// Flat little-endian blob: magic "gDTM", version, family, dims, anchor, then
/// W1 b1 W2 b2 W3 b3 as row-major 64-bit floats.
std::vector<std::uint8_t> serialize_model(const ToyDenoiser& model);
ToyDenoiser deserialize_model(std::span<const std::uint8_t> bytes);

}  // namespace gddcm
