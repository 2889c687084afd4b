#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace gddcm {

/// Counter-based generator used for every reproducible random draw.
///
/// A stream is identified by a 64-bit key. Word n of the stream is
/// `mix64(key + (n + 1) * 0x9E3779B97F4A7C15)` where `mix64` is the
/// SplitMix64 finalizer. Uniforms take the top 53 bits of a word.
/// Normals come in Box-Muller pairs: pair c consumes words 2c and 2c+1,
/// u1 = 1 - uniform(word 2c) in (0,1], u2 = uniform(word 2c+1),
/// z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2).
/// Any position of the stream is addressable without generating its prefix.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static std::uint64_t mix64(std::uint64_t z) noexcept;

    /// Key for stream `index` under `seed`; index -1 is the initialization stream.
    static std::uint64_t stream_key(std::uint64_t seed, std::int64_t index) noexcept;

    std::uint64_t key() const noexcept { return key_; }

    /// Word `n` of the stream, independent of the cursor.
    std::uint64_t word(std::uint64_t n) const noexcept;

    /// Standard-normal value number `n` of the stream, independent of the cursor.
    double normal_at(std::uint64_t n) const noexcept;

    std::uint64_t next_u64() noexcept { return word(cursor_++); }
    double uniform() noexcept;  // [0, 1)
    double normal() noexcept;
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Fills `out` with normals drawn from the cursor onwards.
    void fill_normal(Eigen::Ref<Eigen::VectorXd> out) noexcept;
    Eigen::VectorXd normal_vector(Eigen::Index dim);

private:
    std::uint64_t key_;
    std::uint64_t cursor_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline double to_unit_interval(std::uint64_t w) noexcept {
    return static_cast<double>(w >> 11) * 0x1.0p-53;
}

}  // namespace gddcm
