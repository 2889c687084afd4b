// gddcm command-line front end.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "gddcm/config.hpp"
#include "gddcm/dataset.hpp"
#include "gddcm/metrics.hpp"
#include "gddcm/stream_format.hpp"
#include "gddcm/sweep.hpp"
#include "gddcm/toy_model.hpp"
#include "gddcm/verify.hpp"

using namespace gddcm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCorrupt = 3;
constexpr int kExitVerify = 4;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string input;
    std::optional<std::string> family;
    std::optional<double> p;
    std::optional<std::uint32_t> tokens;
    std::optional<std::uint32_t> codebook_size;
    std::optional<std::uint32_t> count;
    std::uint32_t index = 0;
    std::uint32_t final_steps = 32;
    std::string curve;
    std::string check;
};

ExperimentConfig load(const Options& o) {
    ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.family) cfg.tokenizer.family = parse_family(*o.family);
    if (o.p) cfg.tokenizer.p = *o.p;
    if (o.tokens) cfg.tokenizer.tokens = *o.tokens;
    if (o.codebook_size) cfg.tokenizer.codebook.size = *o.codebook_size;
    cfg.tokenizer.codebook.dim = cfg.data.dim();
    return cfg;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::unique_ptr<Denoiser> make_backend(const ExperimentConfig& cfg, ModelFamily family) {
    if (cfg.backend.kind == BackendKind::Analytic) return std::make_unique<AnalyticDenoiser>(cfg.data, family);
    auto model = std::make_unique<ToyDenoiser>(deserialize_model(read_bytes(cfg.backend.model_path)));
    if (model->family() != family) {
        throw ConfigError("toy model was trained for family '" + std::string(to_string(model->family())) +
                          "', config asks for '" + std::string(to_string(family)) + "'");
    }
    return model;
}

std::vector<Vector> targets_for(const Options& o, const ExperimentConfig& cfg, std::uint32_t default_count) {
    if (!o.input.empty()) return read_vectors_csv(o.input);
    return generate_dataset(cfg.data, o.count.value_or(default_count), cfg.seed);
}

// Writes to --out, or stdout when it is empty or "-".
template <typename Fn>
void emit(const std::string& out, Fn write) {
    if (out.empty() || out == "-") {
        write(std::cout);
        return;
    }
    std::ofstream f(out);
    if (!f) throw ConfigError("cannot write '" + out + "'");
    write(f);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_gen_data(const Options& o) {
    const auto cfg = load(o);
    const auto rows = generate_dataset(cfg.data, o.count.value_or(cfg.dataset_size), cfg.seed);
    emit(o.out, [&](std::ostream& s) { write_vectors_csv(s, rows); });
    return 0;
}

int cmd_train(const Options& o) {
    const auto cfg = load(o);
    auto train = cfg.train;
    if (o.seed) train.seed = *o.seed;
    const auto family = o.family ? parse_family(*o.family) : cfg.tokenizer.family;
    if (o.out.empty()) throw ConfigError("train needs --out");
    const auto model = train_model(cfg.data, train, family);
    write_bytes(o.out, serialize_model(model));
    if (!o.curve.empty()) {
        emit(o.curve, [&](std::ostream& s) {
            s << "step,loss\n";
            for (const auto& pt : model.loss_curve()) s << pt.step << ',' << num(pt.loss) << '\n';
        });
    }
    std::cerr << "trained " << to_string(family) << " model: loss " << initial_loss(model) << " -> "
              << final_loss(model) << '\n';
    return 0;
}

int cmd_tokenize(const Options& o) {
    const auto cfg = load(o);
    const auto targets = targets_for(o, cfg, o.index + 1);
    if (o.index >= targets.size()) throw ConfigError("--index beyond the number of input rows");
    if (o.out.empty()) throw ConfigError("tokenize needs --out");
    const auto backend = make_backend(cfg, cfg.tokenizer.family);
    auto tk = cfg.tokenizer;
    tk.codebook.seed = sample_seed(cfg.seed, o.index);
    const auto [stream, rec] = tokenize(tk, targets[o.index], *backend);
    const auto bytes = encode_stream(stream);
    write_bytes(o.out, bytes);
    std::cerr << "wrote " << bytes.size() << " bytes (" << stream.indices.size() << " tokens), mse "
              << mse(rec.x_r, targets[o.index]) << '\n';
    return 0;
}

int cmd_detokenize(const Options& o) {
    const auto cfg = load(o);
    if (o.input.empty()) throw ConfigError("detokenize needs --input <stream>");
    const auto stream = decode_stream(read_bytes(o.input));
    const auto backend = make_backend(cfg, stream.config.family);
    DetokenizeOptions opts;
    opts.final_sample_steps = o.final_steps;
    const auto rec = detokenize(stream, *backend, opts);
    emit(o.out, [&](std::ostream& s) { write_vectors_csv(s, {rec.x_r}); });
    return 0;
}

int cmd_evaluate(const Options& o) {
    const auto cfg = load(o);
    const auto targets = targets_for(o, cfg, cfg.dataset_size);
    const auto backend = make_backend(cfg, cfg.tokenizer.family);
    const Eigen::Index side = image_side(backend->dim());
    bool all_exact = true;
    emit(o.out, [&](std::ostream& s) {
        s << "index,mse,psnr,ssim,bits,roundtrip_exact\n";
        for (std::size_t i = 0; i < targets.size(); ++i) {
            auto tk = cfg.tokenizer;
            tk.codebook.seed = sample_seed(cfg.seed, i);
            const auto [stream, rec] = tokenize(tk, targets[i], *backend);
            const auto bytes = encode_stream(stream);
            DetokenizeOptions opts;
            opts.final_sample_steps = tk.final_sample_steps;
            const auto replay = detokenize(decode_stream(bytes), *backend, opts);
            const bool exact = replay.x_r == rec.x_r;
            all_exact = all_exact && exact;
            const double e = mse(rec.x_r, targets[i]);
            const double q = side ? ssim(ImageGrid(side, side, rec.x_r), ImageGrid(side, side, targets[i]))
                                  : std::numeric_limits<double>::quiet_NaN();
            s << i << ',' << num(e) << ',' << num(psnr_from_mse(e)) << ',' << num(q) << ',' << 8 * bytes.size()
              << ',' << (exact ? 1 : 0) << '\n';
        }
    });
    return all_exact ? 0 : kExitVerify;
}

int cmd_verify(const Options& o) {
    const std::uint64_t seed = o.seed.value_or(0);
    VerificationResult r;
    if (o.check == "theorem1") {
        r = verify_theorem1(seed);
    } else if (o.check == "marginal") {
        r = verify_marginal(seed);
    } else {
        r = verify_selection(seed);
    }
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.summary << '\n';
    return r.passed ? 0 : kExitVerify;
}

int cmd_sweep(const Options& o) {
    const auto cfg = load(o);
    const auto targets = targets_for(o, cfg, cfg.sweep.validation_size);
    const auto backend = make_backend(cfg, cfg.tokenizer.family);
    const auto rows = run_sweep(cfg.tokenizer, cfg.sweep, targets, *backend, cfg.seed);
    emit(o.out, [&](std::ostream& s) { write_sweep_csv(s, rows); });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gddcm: diffusion-codebook tokenizer over exact and toy backends"};
    app.require_subcommand(1);
    Options o;

    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "global seed");
        sub->add_option("--out", o.out, "output path ('-' or omitted: stdout where applicable)");
    };
    auto tokenizer_flags = [&o](CLI::App* sub) {
        sub->add_option("--family", o.family, "ddpm | ve | consistency | flow");
        sub->add_option("--p", o.p, "re-noising fraction in [0, 1]");
        sub->add_option("--tokens", o.tokens, "token count N");
        sub->add_option("--codebook-size", o.codebook_size, "codebook size K");
    };

    auto* gen = app.add_subcommand("gen-data", "sample the configured mixture to CSV");
    common(gen);
    gen->add_option("--count", o.count, "number of samples (default: dataset_size)");

    auto* train = app.add_subcommand("train", "train a toy denoiser and write its parameter blob");
    common(train);
    train->add_option("--family", o.family, "ddpm | flow");
    train->add_option("--curve", o.curve, "write the monitored loss curve CSV here");

    auto* tok = app.add_subcommand("tokenize", "tokenize one dataset row into a stream file");
    common(tok);
    tokenizer_flags(tok);
    tok->add_option("--input", o.input, "dataset CSV (default: generated from the config)");
    tok->add_option("--index", o.index, "row to tokenize");

    auto* detok = app.add_subcommand("detokenize", "reconstruct a sample from a stream file");
    common(detok);
    detok->add_option("--input", o.input, "stream file")->required();
    detok->add_option("--final-steps", o.final_steps, "final ODE sub-steps (p = 0 streams)");

    auto* eval = app.add_subcommand("evaluate", "per-sample metrics and round-trip check as CSV");
    common(eval);
    tokenizer_flags(eval);
    eval->add_option("--input", o.input, "dataset CSV (default: generated from the config)");
    eval->add_option("--count", o.count, "generated sample count");

    auto* verify = app.add_subcommand("verify", "run a built-in property check");
    verify->add_option("--seed", o.seed, "seed");
    verify->add_option("check", o.check, "theorem1 | marginal | selection")
        ->required()
        ->check(CLI::IsMember({"theorem1", "marginal", "selection"}));

    auto* sweep = app.add_subcommand("sweep", "validation-set parameter search, ranked CSV");
    common(sweep);
    tokenizer_flags(sweep);
    sweep->add_option("--input", o.input, "validation CSV (default: generated from the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*gen) return cmd_gen_data(o);
        if (*train) return cmd_train(o);
        if (*tok) return cmd_tokenize(o);
        if (*detok) return cmd_detokenize(o);
        if (*eval) return cmd_evaluate(o);
        if (*verify) return cmd_verify(o);
        if (*sweep) return cmd_sweep(o);
    } catch (const CorruptStreamError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCorrupt;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
