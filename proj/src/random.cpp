#include "gddcm/random.hpp"

#include <cmath>
#include <numbers>

namespace gddcm {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kIndexMul = 0xD1B54A32D192ED03ULL;

void box_muller(std::uint64_t w1, std::uint64_t w2, double& z0, double& z1) noexcept {
    const double u1 = 1.0 - to_unit_interval(w1);
    const double u2 = to_unit_interval(w2);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    z0 = r * std::cos(theta);
    z1 = r * std::sin(theta);
}
}  // namespace

std::uint64_t CounterRng::mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t CounterRng::stream_key(std::uint64_t seed, std::int64_t index) noexcept {
    return mix64(mix64(seed + kGolden) ^ (static_cast<std::uint64_t>(index) * kIndexMul));
}

std::uint64_t CounterRng::word(std::uint64_t n) const noexcept {
    return mix64(key_ + (n + 1) * kGolden);
}

double CounterRng::normal_at(std::uint64_t n) const noexcept {
    double z0 = 0.0;
    double z1 = 0.0;
    const std::uint64_t pair = n / 2;
    box_muller(word(2 * pair), word(2 * pair + 1), z0, z1);
    return (n % 2 == 0) ? z0 : z1;
}

double CounterRng::uniform() noexcept { return to_unit_interval(next_u64()); }

double CounterRng::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const std::uint64_t w1 = next_u64();
    const std::uint64_t w2 = next_u64();
    double z0 = 0.0;
    box_muller(w1, w2, z0, spare_);
    has_spare_ = true;
    return z0;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
    // Lemire's multiply-shift; the bias is below 2^-64 * bound.
    const auto product = static_cast<unsigned __int128>(next_u64()) * bound;
    return static_cast<std::uint64_t>(product >> 64);
}

void CounterRng::fill_normal(Eigen::Ref<Eigen::VectorXd> out) noexcept {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal();
}

Eigen::VectorXd CounterRng::normal_vector(Eigen::Index dim) {
    Eigen::VectorXd v(dim);
    fill_normal(v);
    return v;
}

}  // namespace gddcm
