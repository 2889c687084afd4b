#include <doctest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <vector>

#include "gddcm/errors.hpp"
#include "gddcm/random.hpp"
#include "gddcm/scheduler.hpp"

using namespace gddcm;
using HP = boost::multiprecision::cpp_dec_float_50;

namespace {

// Allocation counts evaluated at 50 digits, positions supplied by the caller.
std::vector<long> hp_counts(const std::vector<HP>& positions, unsigned P, double rho, double sigma_max, unsigned N) {
    const HP r(rho);
    const HP base = boost::multiprecision::pow(HP(sigma_max), 1 / r) - 1;
    std::vector<HP> w;
    HP total = 0;
    for (const auto& x : positions) {
        w.push_back(boost::multiprecision::pow(1 + x / P * base, r));
        total += w.back();
    }
    std::vector<long> out;
    for (const auto& v : w) out.push_back(boost::multiprecision::floor(v / total * N + HP("0.5")).convert_to<long>());
    return out;
}

std::vector<long> hp_continuous(unsigned P, double rho, double sigma_max, unsigned N) {
    std::vector<HP> pos;
    for (unsigned k = 0; k <= P; ++k) pos.emplace_back(k);
    return hp_counts(pos, P, rho, sigma_max, N);
}

HP hp_exponent(unsigned k, long dt_min, unsigned P) {
    const HP lo(dt_min), hi(dt_min + static_cast<long>(P));
    return P * boost::multiprecision::log(hi / (lo + k)) / boost::multiprecision::log(hi / lo);
}

std::vector<long> hp_discrete(unsigned P, long dt_min, double rho, double sigma_max, unsigned N) {
    std::vector<HP> pos;
    for (unsigned k = 0; k <= P; ++k) pos.push_back(hp_exponent(k, dt_min, P));
    return hp_counts(pos, P, rho, sigma_max, N);
}

}  // namespace

TEST_SUITE("scheduler") {

TEST_CASE("interval lengths interpolate geometrically") {
    ContinuousSchedule s{4, 0.01, 0.16, 7.0, 80.0, 100};
    CHECK(interval_length(0, s) == doctest::Approx(0.16).epsilon(1e-15));
    CHECK(interval_length(4, s) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(interval_length(2, s) == doctest::Approx(0.04).epsilon(1e-14));
    // log-linear in k
    const double l0 = std::log(interval_length(0, s)), l1 = std::log(interval_length(1, s));
    const double l3 = std::log(interval_length(3, s));
    CHECK(std::abs((l1 - l0) * 3.0 - (l3 - l0)) < 1e-12);
    CHECK_THROWS_AS(interval_length(5, s), DomainError);
}

TEST_CASE("sigma_max = 1 gives a flat allocation") {
    for (double rho : {0.5, 3.0, 7.0}) {
        ContinuousSchedule s{4, 0.01, 0.1, rho, 1.0, 100};
        for (unsigned k = 0; k <= 4; ++k) CHECK(interval_iterations(k, s) == 20);
        const auto plan = build_step_plan(s);
        for (const auto& e : plan.entries) CHECK(e.count == 20);
    }
    ContinuousSchedule one{4, 0.01, 0.1, 7.0, 1.0, 5};
    for (const auto& e : build_step_plan(one).entries) CHECK(e.count == 1);
}

TEST_CASE("continuous counts match frozen high-precision values") {
    // frozen from an independent 50-digit evaluation
    const std::vector<long> n100{1, 3, 10, 26, 61}, n300{2, 9, 29, 77, 183}, n128{1, 4, 12, 33, 78};
    for (auto [N, want] : {std::pair{100u, n100}, std::pair{300u, n300}, std::pair{128u, n128}}) {
        ContinuousSchedule s{4, 0.01, 0.1, 7.0, 80.0, N};
        CHECK(hp_continuous(4, 7.0, 80.0, N) == want);
        for (unsigned k = 0; k <= 4; ++k) CHECK(interval_iterations(k, s) == want[k]);
    }
    // N = 100 rounds to 101; the residual comes out of the smallest-dt bucket
    ContinuousSchedule s{4, 0.01, 0.1, 7.0, 80.0, 100};
    const auto plan = build_step_plan(s);
    CHECK(plan.total() == 100);
    CHECK(plan.entries.back().count == 60);
    CHECK(plan.entries.back().dt == doctest::Approx(0.01));
    for (std::size_t i = 1; i < plan.entries.size(); ++i) CHECK(plan.entries[i].dt <= plan.entries[i - 1].dt);
}

TEST_CASE("counts are non-decreasing in k when sigma_max > 1") {
    ContinuousSchedule s{6, 0.01, 0.1, 3.0, 20.0, 500};
    for (unsigned k = 1; k <= 6; ++k) CHECK(interval_iterations(k, s) >= interval_iterations(k - 1, s));
}

TEST_CASE("discrete exponent endpoints and round trip") {
    CHECK(discrete_exponent(0, 2, 3) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(discrete_exponent(3, 2, 3) == 0.0);
    const double m = discrete_exponent(1, 2, 3);
    CHECK(m == doctest::Approx(3.0 * std::log(5.0 / 3.0) / std::log(2.5)).epsilon(1e-15));
    CHECK(std::abs(m - 1.6724788519507202019) < 1e-14);
    CHECK(std::abs(std::pow(2.0, m / 3) * std::pow(5.0, (3 - m) / 3) - 3.0) < 1e-12);
    CHECK_THROWS_AS(discrete_exponent(0, 2, 0), DomainError);
    CHECK_THROWS_AS(discrete_exponent(0, 0, 3), DomainError);
}

TEST_CASE("discrete counts match frozen high-precision values") {
    // index k = 0..P, k = 0 is the dt_min bucket
    struct Case {
        unsigned P;
        long dt_min;
        std::vector<long> want;
    };
    for (const auto& c : {Case{4, 1, {228, 48, 16, 6, 3}}, Case{3, 2, {238, 47, 11, 3}}}) {
        DiscreteSchedule s{c.P, c.dt_min, 7.0, 80.0, 300};
        CHECK(hp_discrete(c.P, c.dt_min, 7.0, 80.0, 300) == c.want);
        long sum = 0;
        for (unsigned k = 0; k <= c.P; ++k) {
            CHECK(discrete_iterations(k, s) == c.want[k]);
            sum += c.want[k];
        }
        const auto plan = build_step_plan(s);
        CHECK(plan.total() == 300);
        CHECK(plan.entries.front().dt == static_cast<double>(c.dt_min + c.P));
        CHECK(plan.entries.back().dt == static_cast<double>(c.dt_min));
        CHECK(plan.entries.back().count == static_cast<std::uint32_t>(c.want[0] + 300 - sum));
    }
    DiscreteSchedule flat{3, 2, 7.0, 1.0, 300};
    for (unsigned k = 0; k <= 3; ++k) CHECK(discrete_iterations(k, flat) == 75);
}

TEST_CASE("plan expansion follows entry order") {
    ContinuousSchedule s{2, 0.01, 0.04, 7.0, 80.0, 10};
    const auto plan = build_step_plan(s);
    const auto steps = plan.expand();
    REQUIRE(steps.size() == 10);
    std::size_t i = 0;
    for (const auto& e : plan.entries)
        for (std::uint32_t c = 0; c < e.count; ++c) CHECK(steps[i++] == e.dt);
}

TEST_CASE("invalid schedules are rejected") {
    CHECK_THROWS_AS(build_step_plan(ContinuousSchedule{0, 0.01, 0.1, 7.0, 80.0, 10}), ConfigError);
    CHECK_THROWS_AS(build_step_plan(ContinuousSchedule{4, 0.2, 0.1, 7.0, 80.0, 10}), ConfigError);
    CHECK_THROWS_AS(build_step_plan(ContinuousSchedule{4, 0.0, 0.1, 7.0, 80.0, 10}), ConfigError);
    CHECK_THROWS_AS(build_step_plan(ContinuousSchedule{4, 0.01, 0.1, -1.0, 80.0, 10}), ConfigError);
    CHECK_THROWS_AS(build_step_plan(ContinuousSchedule{4, 0.01, 0.1, 7.0, 80.0, 3}), ConfigError);
    CHECK_THROWS_AS(build_step_plan(DiscreteSchedule{4, 0, 7.0, 80.0, 10}), ConfigError);
}

TEST_CASE("residual that would go negative is reported") {
    // flat weights, every share is exactly 1.5 and rounds up: raw total 16 for N = 12
    ContinuousSchedule s{7, 0.01, 0.1, 7.0, 1.0, 12};
    CHECK(interval_iterations(0, s) == 2);
    CHECK_THROWS_AS(build_step_plan(s), ConfigError);
}

TEST_CASE("random schedules sum to N and match the oracle") {
    CounterRng rng(CounterRng::stream_key(11, 0));
    for (int trial = 0; trial < 200; ++trial) {
        const unsigned P = 1 + static_cast<unsigned>(rng.below(8));
        const unsigned N = P + static_cast<unsigned>(rng.below(400));
        const double rho = 1.0 + 9.0 * rng.uniform();
        const double sigma_max = 1.0 + 99.0 * rng.uniform();
        if (trial % 2 == 0) {
            const double dt_min = 0.001 + 0.05 * rng.uniform();
            ContinuousSchedule s{P, dt_min, dt_min * (1.0 + 10.0 * rng.uniform()), rho, sigma_max, N};
            const auto want = hp_continuous(P, rho, sigma_max, N);
            for (unsigned k = 0; k <= P; ++k) CHECK(interval_iterations(k, s) == want[k]);
            try {
                CHECK(build_step_plan(s).total() == N);
            } catch (const ConfigError&) {
            }
        } else {
            const long dt_min = 1 + static_cast<long>(rng.below(20));
            DiscreteSchedule s{P, dt_min, rho, sigma_max, N};
            const auto want = hp_discrete(P, dt_min, rho, sigma_max, N);
            for (unsigned k = 0; k <= P; ++k) {
                CHECK(discrete_iterations(k, s) == want[k]);
                const double m = discrete_exponent(k, dt_min, P);
                const double back = std::pow(double(dt_min), m / P) * std::pow(double(dt_min + P), (P - m) / P);
                CHECK(std::abs(back - double(dt_min + k)) <= 1e-10);
            }
            try {
                CHECK(build_step_plan(s).total() == N);
            } catch (const ConfigError&) {
            }
        }
    }
}

}  // TEST_SUITE
