#include "hollow/config.hpp"

#include <fstream>
#include <sstream>

#include "hollow/error.hpp"

namespace hollow {

using nlohmann::json;

std::string to_string(PrunerMode mode) {
    switch (mode) {
    case PrunerMode::none: return "none";
    case PrunerMode::l1: return "l1";
    case PrunerMode::admm: return "admm";
    }
    return "?";
}

PrunerMode parse_pruner_mode(const std::string& s) {
    if (s == "none") return PrunerMode::none;
    if (s == "l1") return PrunerMode::l1;
    if (s == "admm") return PrunerMode::admm;
    throw ConfigError("unknown pruner mode '" + s + "' (expected none|l1|admm)");
}

void Config::validate() const {
    model.validate();
    if (pruner.mode != PrunerMode::none && !model.saliency_enabled) {
        throw ConfigError("pruner '" + to_string(pruner.mode) + "' needs the saliency grid (saliency=on)");
    }
    if (!(pruner.budget > 0.0 && pruner.budget < 1.0)) throw ConfigError("pruner.budget must be in (0, 1)");
    if (!(pruner.rho > 0.0)) throw ConfigError("pruner.rho must be > 0");
    if (!(pruner.lambda >= 0.0)) throw ConfigError("pruner.lambda must be >= 0");
    if (!(pruner.gamma_init >= 0.0)) throw ConfigError("pruner.gamma_init must be >= 0");
    if (train.steps < 0) throw ConfigError("train.steps must be >= 0");
    if (!(train.lr > 0.0)) throw ConfigError("train.lr must be > 0");
    if (train.rays_per_step < 1) throw ConfigError("train.rays_per_step must be >= 1");
    if (train.samples_per_ray < 1) throw ConfigError("train.samples_per_ray must be >= 1");
    if (train.eval_interval < 0) throw ConfigError("train.eval_interval must be >= 0");
    if (train.log_interval < 0) throw ConfigError("train.log_interval must be >= 0");
    if (train.eval_views < 0) throw ConfigError("train.eval_views must be >= 0");
    if (train.steps_per_epoch < 0) throw ConfigError("train.steps_per_epoch must be >= 0");
    if (train.threads < 0) throw ConfigError("train.threads must be >= 0");
    if (!(train.lr_decay_final > 0.0)) throw ConfigError("train.lr_decay_final must be > 0");
    if (!(render.near < render.far) || render.near < 0.0) throw ConfigError("render: need 0 <= near < far");
    if (render.samples_per_ray < 0) throw ConfigError("render.samples_per_ray must be >= 0");
}

Config full_preset() {
    Config c;
    c.model.hashgrid.log2_table_size = 19;
    c.model.saliency_res = 64;
    c.pruner.budget = 0.04;
    c.train.steps = 300000;
    c.train.rays_per_step = 4096;
    c.train.samples_per_ray = 128;
    return c;
}

Config desk_preset() {
    Config c;
    c.model.hashgrid.log2_table_size = 12;
    c.model.saliency_res = 16;
    c.pruner.budget = 0.04;
    c.pruner.rho = 1e-6;
    c.train.steps = 20000;
    c.train.rays_per_step = 128;
    c.train.samples_per_ray = 64;
    c.train.eval_interval = 2000;
    c.train.eval_views = 4;
    return c;
}

Config preset(const std::string& name) {
    if (name == "full") return full_preset();
    if (name == "desk") return desk_preset();
    throw ConfigError("unknown preset '" + name + "' (expected full|desk)");
}

json to_json(const Config& c) {
    const auto& h = c.model.hashgrid;
    json j;
    j["model"] = {
        {"hashgrid",
         {{"levels", h.levels},
          {"feature_dim", h.feature_dim},
          {"log2_table_size", h.log2_table_size},
          {"base_res", h.base_res},
          {"max_res", h.max_res}}},
        {"saliency", c.model.saliency_enabled},
        {"saliency_res", c.model.saliency_res},
        {"hidden", c.model.hidden},
        {"geo_dim", c.model.geo_dim},
        {"gate",
         {{"mode", to_string(c.model.gate.mode)},
          {"alpha_low", c.model.gate.alpha_low},
          {"alpha_high", c.model.gate.alpha_high},
          {"epoch_threshold", c.model.gate.epoch_threshold}}},
    };
    j["pruner"] = {{"mode", to_string(c.pruner.mode)},
                   {"budget", c.pruner.budget},
                   {"rho", c.pruner.rho},
                   {"lambda", c.pruner.lambda},
                   {"gamma_init", c.pruner.gamma_init}};
    const auto& t = c.train;
    j["train"] = {{"steps", t.steps},
                  {"lr", t.lr},
                  {"beta1", t.beta1},
                  {"beta2", t.beta2},
                  {"eps", t.eps},
                  {"lr_decay", t.lr_decay},
                  {"lr_decay_final", t.lr_decay_final},
                  {"rays_per_step", t.rays_per_step},
                  {"samples_per_ray", t.samples_per_ray},
                  {"seed", t.seed},
                  {"eval_interval", t.eval_interval},
                  {"eval_views", t.eval_views},
                  {"log_interval", t.log_interval},
                  {"steps_per_epoch", t.steps_per_epoch},
                  {"threads", t.threads}};
    const auto& r = c.render;
    j["render"] = {{"near", r.near},
                   {"far", r.far},
                   {"background", r.background},
                   {"samples_per_ray", r.samples_per_ray},
                   {"saliency_skip", r.saliency_skip},
                   {"skip_threshold", r.skip_threshold}};
    return j;
}

namespace {

void reject_unknown(const json& given, const json& reference, const std::string& prefix) {
    if (!given.is_object()) {
        throw ConfigError("config section '" + prefix + "' must be an object");
    }
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!reference.contains(it.key())) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        const json& ref = reference.at(it.key());
        if (ref.is_object()) {
            reject_unknown(it.value(), ref, key);
        }
    }
}

template <typename V>
void read(const json& j, const char* key, V& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<V>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + section + "." + key + "': " + e.what());
    }
}

const json& section(const json& j, const char* name) {
    static const json empty = json::object();
    return j.contains(name) ? j.at(name) : empty;
}

} // namespace

Config config_from_json(const json& j) {
    Config c;
    reject_unknown(j, to_json(c), "");
    const json& m = section(j, "model");
    const json& h = section(m, "hashgrid");
    read(h, "levels", c.model.hashgrid.levels, "model.hashgrid");
    read(h, "feature_dim", c.model.hashgrid.feature_dim, "model.hashgrid");
    read(h, "log2_table_size", c.model.hashgrid.log2_table_size, "model.hashgrid");
    read(h, "base_res", c.model.hashgrid.base_res, "model.hashgrid");
    read(h, "max_res", c.model.hashgrid.max_res, "model.hashgrid");
    read(m, "saliency", c.model.saliency_enabled, "model");
    read(m, "saliency_res", c.model.saliency_res, "model");
    read(m, "hidden", c.model.hidden, "model");
    read(m, "geo_dim", c.model.geo_dim, "model");
    const json& g = section(m, "gate");
    std::string gate_mode = to_string(c.model.gate.mode);
    read(g, "mode", gate_mode, "model.gate");
    try {
        c.model.gate.mode = parse_gate_mode(gate_mode);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    read(g, "alpha_low", c.model.gate.alpha_low, "model.gate");
    read(g, "alpha_high", c.model.gate.alpha_high, "model.gate");
    read(g, "epoch_threshold", c.model.gate.epoch_threshold, "model.gate");

    const json& p = section(j, "pruner");
    std::string pruner_mode = to_string(c.pruner.mode);
    read(p, "mode", pruner_mode, "pruner");
    c.pruner.mode = parse_pruner_mode(pruner_mode);
    read(p, "budget", c.pruner.budget, "pruner");
    read(p, "rho", c.pruner.rho, "pruner");
    read(p, "lambda", c.pruner.lambda, "pruner");
    read(p, "gamma_init", c.pruner.gamma_init, "pruner");

    const json& t = section(j, "train");
    read(t, "steps", c.train.steps, "train");
    read(t, "lr", c.train.lr, "train");
    read(t, "beta1", c.train.beta1, "train");
    read(t, "beta2", c.train.beta2, "train");
    read(t, "eps", c.train.eps, "train");
    read(t, "lr_decay", c.train.lr_decay, "train");
    read(t, "lr_decay_final", c.train.lr_decay_final, "train");
    read(t, "rays_per_step", c.train.rays_per_step, "train");
    read(t, "samples_per_ray", c.train.samples_per_ray, "train");
    read(t, "seed", c.train.seed, "train");
    read(t, "eval_interval", c.train.eval_interval, "train");
    read(t, "eval_views", c.train.eval_views, "train");
    read(t, "log_interval", c.train.log_interval, "train");
    read(t, "steps_per_epoch", c.train.steps_per_epoch, "train");
    read(t, "threads", c.train.threads, "train");

    const json& r = section(j, "render");
    read(r, "near", c.render.near, "render");
    read(r, "far", c.render.far, "render");
    read(r, "background", c.render.background, "render");
    read(r, "samples_per_ray", c.render.samples_per_ray, "render");
    read(r, "saliency_skip", c.render.saliency_skip, "render");
    read(r, "skip_threshold", c.render.skip_threshold, "render");
    c.validate();
    return c;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) {
        value = raw;
    }
    const json reference = to_json(Config{});
    const json* ref = &reference;
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!ref->is_object() || !ref->contains(part)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        ref = &ref->at(part);
        if (!node->is_object()) {
            *node = json::object();
        }
        node = &(*node)[part];
        if (dot == std::string::npos) {
            break;
        }
        start = dot + 1;
    }
    if (ref->is_object()) {
        throw ConfigError("override '" + key + "' names a section, not a value");
    }
    *node = value;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ConfigError("config file " + path.string() + " is not valid JSON");
    }
    return config_from_json(j);
}

void save_config(const Config& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write config file " + path.string());
    }
    out << to_json(cfg).dump(2) << '\n';
    if (!out) {
        throw DataError("write failed for " + path.string());
    }
}

} // namespace hollow
