#pragma once

#include <vector>

#include "gddcm/backend.hpp"
#include "gddcm/marginal.hpp"
#include "gddcm/random.hpp"

namespace gddcm {

struct MixtureComponent {
    double weight;
    Vector mean;
    double var;  // isotropic variance
};

/// Isotropic Gaussian mixture standing in for the data distribution.
class GaussianMixture {
public:
    explicit GaussianMixture(std::vector<MixtureComponent> components);

    Eigen::Index dim() const noexcept { return components_.front().mean.size(); }
    std::size_t size() const noexcept { return components_.size(); }
    const std::vector<MixtureComponent>& components() const noexcept { return components_; }
    const MixtureComponent& operator[](std::size_t j) const { return components_.at(j); }

    /// Weighted mean of the component means.
    Vector mean() const;

    /// Four 8x8 corner-gradient prototypes, var 0.01, equal weights (d = 64).
    static GaussianMixture prototype_images();
    /// Equal-weight pair at +/- `offset` with variance `var`, in 2-D.
    static GaussianMixture symmetric_pair_2d(const Vector& offset, double var);
    static GaussianMixture single(const Vector& mean, double var);

private:
    std::vector<MixtureComponent> components_;
};

inline constexpr int kPrototypeSide = 8;

Vector gm_sample(const GaussianMixture& mix, CounterRng& rng);

/// E[x0 | x_t] under x_t = s x0 + Sigma eps.
Vector gm_posterior_x0(const GaussianMixture& mix, const Vector& x_t, double t, const MarginalSchedule& sched);

/// grad_x log p_t(x).
Vector gm_marginal_score(const GaussianMixture& mix, const Vector& x_t, double t, const MarginalSchedule& sched);

/// log p_t(x).
double gm_log_marginal(const GaussianMixture& mix, const Vector& x_t, double t, const MarginalSchedule& sched);

struct OracleOutput {
    Vector o_t;
    Vector x0_mean;
    double log_marginal;
};

/// Exact model output of the given family for mixture data.
OracleOutput gm_family_output(const GaussianMixture& mix, const Vector& x_t, double t, ModelFamily family);
OracleOutput gm_family_output(const GaussianMixture& mix, const Vector& x_t, double t,
                              const MarginalSchedule& sched);

/// Exact "pretrained model" for mixture data.
class AnalyticDenoiser final : public Denoiser {
public:
    AnalyticDenoiser(GaussianMixture mixture, ModelFamily family)
        : mixture_(std::move(mixture)), schedule_(MarginalSchedule::for_family(family)) {}

    ModelFamily family() const override { return schedule_.family(); }
    Eigen::Index dim() const override { return mixture_.dim(); }
    Vector output(const Vector& x_t, double t) const override;
    Vector anchor() const override { return mixture_.mean(); }

    const GaussianMixture& mixture() const noexcept { return mixture_; }
    const MarginalSchedule& schedule() const noexcept { return schedule_; }

private:
    GaussianMixture mixture_;
    MarginalSchedule schedule_;
};

}  // namespace gddcm
