#include "gddcm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gddcm {

using nlohmann::json;

std::string_view to_string(Objective objective) noexcept {
    return objective == Objective::Mse ? "mse" : "ssim";
}

Objective parse_objective(std::string_view name) {
    if (name == "mse") return Objective::Mse;
    if (name == "ssim") return Objective::Ssim;
    throw ConfigError("unknown objective '" + std::string(name) + "' (expected mse or ssim)");
}

std::string_view to_string(SelectionRule rule) noexcept {
    return rule == SelectionRule::Argmax ? "argmax" : "random";
}

SelectionRule parse_selection_rule(std::string_view name) {
    if (name == "argmax") return SelectionRule::Argmax;
    if (name == "random") return SelectionRule::UniformRandom;
    throw ConfigError("unknown selection rule '" + std::string(name) + "' (expected argmax or random)");
}

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("wrong type for '" + std::string(key) + "' in " + where);
    }
}

Vector read_vector(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where + " must be a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(where + " must contain numbers");
        out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
}

GaussianMixture parse_data(const json& d, std::string& kind) {
    only_keys(d, "data", {"kind", "offset", "var", "mean", "components"});
    read(d, "kind", kind, "data");
    try {
        if (kind == "prototypes") return GaussianMixture::prototype_images();
        if (kind == "pair2d") {
            Vector offset = d.contains("offset") ? read_vector(d["offset"], "data.offset") : Vector::Constant(2, 3.0);
            double var = 0.05;
            read(d, "var", var, "data");
            return GaussianMixture::symmetric_pair_2d(offset, var);
        }
        if (kind == "single") {
            if (!d.contains("mean")) throw ConfigError("data.kind single needs 'mean'");
            double var = 1.0;
            read(d, "var", var, "data");
            return GaussianMixture::single(read_vector(d["mean"], "data.mean"), var);
        }
        if (kind == "mixture") {
            if (!d.contains("components") || !d["components"].is_array()) {
                throw ConfigError("data.kind mixture needs a 'components' array");
            }
            std::vector<MixtureComponent> comps;
            for (const auto& c : d["components"]) {
                only_keys(c, "data.components[]", {"weight", "mean", "var"});
                MixtureComponent mc{0.0, Vector(), 0.0};
                read(c, "weight", mc.weight, "data.components[]");
                read(c, "var", mc.var, "data.components[]");
                if (!c.contains("mean")) throw ConfigError("mixture component needs 'mean'");
                mc.mean = read_vector(c["mean"], "data.components[].mean");
                comps.push_back(std::move(mc));
            }
            if (comps.empty()) throw ConfigError("data.components must not be empty");
            return GaussianMixture(std::move(comps));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid data mixture: ") + e.what());
    }
    throw ConfigError("unknown data.kind '" + kind + "' (expected prototypes, pair2d, single or mixture)");
}

template <typename T, typename Parse>
std::vector<T> read_list(const json& obj, const char* key, Parse parse) {
    std::vector<T> out;
    if (!obj.contains(key)) return out;
    const auto& arr = obj.at(key);
    if (!arr.is_array()) throw ConfigError("sweep." + std::string(key) + " must be an array");
    for (const auto& v : arr) {
        try {
            out.push_back(parse(v));
        } catch (const json::exception&) {
            throw ConfigError("wrong element type in sweep." + std::string(key));
        }
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    only_keys(root, "config",
              {"seed", "family", "p", "tokens", "t_start", "t_end", "schedule", "codebook", "init",
               "final_sample_steps", "selection", "data", "backend", "train", "sweep", "dataset_size"});
    ExperimentConfig cfg;
    auto& tk = cfg.tokenizer;
    read(root, "seed", cfg.seed, "config");
    if (root.contains("family")) {
        std::string name;
        read(root, "family", name, "config");
        tk.family = parse_family(name);
    }
    read(root, "p", tk.p, "config");
    read(root, "tokens", tk.tokens, "config");
    read(root, "t_start", tk.t_start, "config");
    read(root, "t_end", tk.t_end, "config");
    read(root, "final_sample_steps", tk.final_sample_steps, "config");
    read(root, "dataset_size", cfg.dataset_size, "config");
    if (root.contains("init")) {
        std::string name;
        read(root, "init", name, "config");
        tk.init = parse_init_strategy(name);
    }
    if (root.contains("selection")) {
        std::string name;
        read(root, "selection", name, "config");
        tk.selection = parse_selection_rule(name);
    }
    if (root.contains("schedule")) {
        const auto& s = root["schedule"];
        only_keys(s, "schedule", {"P", "dt_min", "dt_max", "rho", "sigma_max"});
        read(s, "P", tk.schedule.P, "schedule");
        read(s, "dt_min", tk.schedule.dt_min, "schedule");
        read(s, "dt_max", tk.schedule.dt_max, "schedule");
        read(s, "rho", tk.schedule.rho, "schedule");
        read(s, "sigma_max", tk.schedule.sigma_max, "schedule");
    }
    if (root.contains("codebook")) {
        const auto& c = root["codebook"];
        only_keys(c, "codebook", {"size"});
        read(c, "size", tk.codebook.size, "codebook");
    }
    if (root.contains("data")) cfg.data = parse_data(root["data"], cfg.data_kind);
    tk.codebook.dim = cfg.data.dim();
    if (root.contains("backend")) {
        const auto& b = root["backend"];
        only_keys(b, "backend", {"kind", "model"});
        std::string kind = "analytic";
        read(b, "kind", kind, "backend");
        if (kind == "analytic") {
            cfg.backend.kind = BackendKind::Analytic;
        } else if (kind == "toy") {
            cfg.backend.kind = BackendKind::Toy;
        } else {
            throw ConfigError("unknown backend.kind '" + kind + "' (expected analytic or toy)");
        }
        read(b, "model", cfg.backend.model_path, "backend");
        if (cfg.backend.kind == BackendKind::Toy && cfg.backend.model_path.empty()) {
            throw ConfigError("backend.kind toy needs backend.model");
        }
    }
    if (root.contains("train")) {
        const auto& t = root["train"];
        only_keys(t, "train", {"steps", "batch", "learning_rate", "seed", "monitor_every", "monitor_batch"});
        read(t, "steps", cfg.train.steps, "train");
        read(t, "batch", cfg.train.batch, "train");
        read(t, "learning_rate", cfg.train.learning_rate, "train");
        read(t, "seed", cfg.train.seed, "train");
        read(t, "monitor_every", cfg.train.monitor_every, "train");
        read(t, "monitor_batch", cfg.train.monitor_batch, "train");
    }
    if (root.contains("sweep")) {
        const auto& s = root["sweep"];
        only_keys(s, "sweep",
                  {"p", "tokens", "codebook_size", "t_start", "P", "dt_min", "dt_max", "rho", "sigma_max", "init",
                   "objective", "validation_size", "workers"});
        auto num = [](const json& v) { return v.get<double>(); };
        auto u32 = [](const json& v) { return v.get<std::uint32_t>(); };
        auto& sw = cfg.sweep;
        sw.p = read_list<double>(s, "p", num);
        sw.tokens = read_list<std::uint32_t>(s, "tokens", u32);
        sw.codebook_size = read_list<std::uint32_t>(s, "codebook_size", u32);
        sw.t_start = read_list<double>(s, "t_start", num);
        sw.P = read_list<std::uint32_t>(s, "P", u32);
        sw.dt_min = read_list<double>(s, "dt_min", num);
        sw.dt_max = read_list<double>(s, "dt_max", num);
        sw.rho = read_list<double>(s, "rho", num);
        sw.sigma_max = read_list<double>(s, "sigma_max", num);
        sw.init = read_list<InitStrategy>(
            s, "init", [](const json& v) { return parse_init_strategy(v.get<std::string>()); });
        if (s.contains("objective")) {
            std::string name;
            read(s, "objective", name, "sweep");
            sw.objective = parse_objective(name);
        }
        read(s, "validation_size", sw.validation_size, "sweep");
        read(s, "workers", sw.workers, "sweep");
        if (sw.validation_size < 1) throw ConfigError("sweep.validation_size must be at least 1");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    const auto& tk = cfg.tokenizer;
    json j;
    j["seed"] = cfg.seed;
    j["family"] = std::string(to_string(tk.family));
    j["p"] = tk.p;
    j["tokens"] = tk.tokens;
    j["t_start"] = tk.t_start;
    j["t_end"] = tk.t_end;
    j["schedule"] = {{"P", tk.schedule.P},
                     {"dt_min", tk.schedule.dt_min},
                     {"dt_max", tk.schedule.dt_max},
                     {"rho", tk.schedule.rho},
                     {"sigma_max", tk.schedule.sigma_max}};
    j["codebook"] = {{"size", tk.codebook.size}};
    j["init"] = std::string(to_string(tk.init));
    j["selection"] = std::string(to_string(tk.selection));
    j["final_sample_steps"] = tk.final_sample_steps;
    j["dataset_size"] = cfg.dataset_size;
    json comps = json::array();
    for (const auto& c : cfg.data.components()) {
        comps.push_back({{"weight", c.weight}, {"mean", std::vector<double>(c.mean.begin(), c.mean.end())}, {"var", c.var}});
    }
    j["data"] = {{"kind", "mixture"}, {"components", comps}};
    j["backend"] = {{"kind", cfg.backend.kind == BackendKind::Analytic ? "analytic" : "toy"}};
    if (!cfg.backend.model_path.empty()) j["backend"]["model"] = cfg.backend.model_path;
    j["train"] = {{"steps", cfg.train.steps},
                  {"batch", cfg.train.batch},
                  {"learning_rate", cfg.train.learning_rate},
                  {"seed", cfg.train.seed},
                  {"monitor_every", cfg.train.monitor_every},
                  {"monitor_batch", cfg.train.monitor_batch}};
    return j.dump(2);
}

}  // namespace gddcm
