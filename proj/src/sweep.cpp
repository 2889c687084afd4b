#include "gddcm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "gddcm/metrics.hpp"
#include "gddcm/stream_format.hpp"

namespace gddcm {

Eigen::Index image_side(Eigen::Index dim) {
    const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(dim))));
    return (side * side == dim && side >= 8) ? side : 0;
}

EvalSummary evaluate(const TokenizerConfig& cfg, const std::vector<Vector>& targets, const Denoiser& backend,
                     std::uint64_t seed) {
    if (targets.empty()) throw ConfigError("evaluation needs at least one target");
    const Eigen::Index side = image_side(backend.dim());
    EvalSummary out;
    double mse_sum = 0.0, ssim_sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        TokenizerConfig c = cfg;
        c.codebook.seed = sample_seed(seed, i);
        const auto [stream, rec] = tokenize(c, targets[i], backend);
        mse_sum += mse(rec.x_r, targets[i]);
        if (side > 0) ssim_sum += ssim(ImageGrid(side, side, rec.x_r), ImageGrid(side, side, targets[i]));
    }
    const double n = static_cast<double>(targets.size());
    out.samples = static_cast<std::uint32_t>(targets.size());
    out.mean_mse = mse_sum / n;
    out.psnr = psnr_from_mse(out.mean_mse);
    out.mean_ssim = side > 0 ? ssim_sum / n : std::numeric_limits<double>::quiet_NaN();
    const std::uint64_t bits = index_bits(cfg.codebook.size);
    out.bits_per_sample = bits * cfg.tokens + (cfg.init == InitStrategy::NearestNoise ? bits : 0);
    return out;
}

std::vector<TokenizerConfig> expand_grid(const TokenizerConfig& base, const SweepSpec& spec) {
    std::vector<TokenizerConfig> grid{base};
    auto axis = [&grid](const auto& values, auto assign) {
        if (values.empty()) return;
        std::vector<TokenizerConfig> next;
        next.reserve(grid.size() * values.size());
        for (const auto& g : grid) {
            for (const auto& v : values) {
                next.push_back(g);
                assign(next.back(), v);
            }
        }
        grid = std::move(next);
    };
    axis(spec.p, [](TokenizerConfig& c, double v) { c.p = v; });
    axis(spec.tokens, [](TokenizerConfig& c, std::uint32_t v) { c.tokens = v; });
    axis(spec.codebook_size, [](TokenizerConfig& c, std::uint32_t v) { c.codebook.size = v; });
    axis(spec.t_start, [](TokenizerConfig& c, double v) { c.t_start = v; });
    axis(spec.P, [](TokenizerConfig& c, std::uint32_t v) { c.schedule.P = v; });
    axis(spec.dt_min, [](TokenizerConfig& c, double v) { c.schedule.dt_min = v; });
    axis(spec.dt_max, [](TokenizerConfig& c, double v) { c.schedule.dt_max = v; });
    axis(spec.rho, [](TokenizerConfig& c, double v) { c.schedule.rho = v; });
    axis(spec.sigma_max, [](TokenizerConfig& c, double v) { c.schedule.sigma_max = v; });
    axis(spec.init, [](TokenizerConfig& c, InitStrategy v) { c.init = v; });
    return grid;
}

std::vector<SweepRow> run_sweep(const TokenizerConfig& base, const SweepSpec& spec,
                                const std::vector<Vector>& targets, const Denoiser& backend, std::uint64_t seed) {
    if (targets.empty()) throw ConfigError("sweep needs a non-empty validation set");
    if (spec.objective == Objective::Ssim && image_side(backend.dim()) == 0) {
        throw ConfigError("ssim objective needs square image data of side >= 8");
    }
    const auto grid = expand_grid(base, spec);
    std::vector<SweepRow> rows(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            auto& row = rows[i];
            row.grid_index = i;
            row.config = grid[i];
            try {
                row.summary = evaluate(grid[i], targets, backend, seed);
                row.objective = spec.objective == Objective::Mse ? row.summary.mean_mse : row.summary.mean_ssim;
            } catch (const ConfigError& e) {
                row.error = std::string("config_error: ") + e.what();
            } catch (const Error& e) {
                row.error = std::string("numeric_error: ") + e.what();
            }
            if (row.error.empty() && !std::isfinite(row.objective)) row.error = "numeric_error: non-finite objective";
        }
    };
    unsigned n_workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
    n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, grid.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    const bool lower_is_better = spec.objective == Objective::Mse;
    std::stable_sort(rows.begin(), rows.end(), [&](const SweepRow& a, const SweepRow& b) {
        if (a.error.empty() != b.error.empty()) return a.error.empty();
        if (!a.error.empty() || a.objective == b.objective) return a.grid_index < b.grid_index;
        return lower_is_better ? a.objective < b.objective : a.objective > b.objective;
    });
    return rows;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "rank,grid_index,family,p,tokens,codebook_size,t_start,t_end,P,dt_min,dt_max,rho,sigma_max,init,"
           "selection,final_sample_steps,bits_per_sample,mean_mse,psnr,mean_ssim,objective,error\n";
    std::size_t rank = 0;
    for (const auto& r : rows) {
        const auto& c = r.config;
        out << ++rank << ',' << r.grid_index << ',' << to_string(c.family) << ',' << num(c.p) << ',' << c.tokens << ','
            << c.codebook.size << ',' << num(c.t_start) << ',' << num(c.t_end) << ',' << c.schedule.P << ','
            << num(c.schedule.dt_min) << ',' << num(c.schedule.dt_max) << ',' << num(c.schedule.rho) << ','
            << num(c.schedule.sigma_max) << ',' << to_string(c.init) << ',' << to_string(c.selection) << ','
            << c.final_sample_steps << ',';
        if (r.error.empty()) {
            out << r.summary.bits_per_sample << ',' << num(r.summary.mean_mse) << ',' << num(r.summary.psnr) << ','
                << num(r.summary.mean_ssim) << ',' << num(r.objective) << ",\n";
        } else {
            out << ",,,,," << quoted(r.error) << '\n';
        }
    }
}

}  // namespace gddcm
