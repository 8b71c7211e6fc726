#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hollow/radiance_field.hpp"

namespace hollow {

enum class PrunerMode { none, l1, admm };

std::string to_string(PrunerMode mode);
PrunerMode parse_pruner_mode(const std::string& s);

struct PrunerConfig {
    PrunerMode mode = PrunerMode::admm;
    /// Sparsity budget C on the mean sigmoid saliency.
    double budget = 0.04;
    /// Dual learning rate rho_gamma.
    double rho = 1e-3;
    /// Fixed L1 weight (l1 mode only).
    double lambda = 1e-3;
    double gamma_init = 0.0;
};

struct TrainConfig {
    std::int64_t steps = 300000;
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-15;
    /// Exponential decay to lr * lr_decay_final over the run; off by default.
    bool lr_decay = false;
    double lr_decay_final = 0.1;
    int rays_per_step = 4096;
    int samples_per_ray = 128;
    std::uint64_t seed = 0;
    /// 0 evaluates only after the last step.
    std::int64_t eval_interval = 0;
    /// Views of the evaluation split rendered at each eval; 0 = all.
    int eval_views = 0;
    /// Per-step reports go to train_log.jsonl every this many steps; 0 disables.
    std::int64_t log_interval = 0;
    /// 0 derives ceil(dataset rays / rays_per_step).
    std::int64_t steps_per_epoch = 0;
    int threads = 1;
};

struct RenderConfig {
    double near = 2.0;
    double far = 6.0;
    std::array<double, 3> background{1.0, 1.0, 1.0};
    /// Samples per ray at evaluation/render time; 0 reuses train.samples_per_ray.
    int samples_per_ray = 0;
    /// Inference-only saliency skipping (never used while training).
    bool saliency_skip = false;
    double skip_threshold = 1e-2;
};

struct Config {
    ModelConfig model;
    PrunerConfig pruner;
    TrainConfig train;
    RenderConfig render;

    void validate() const;
};

/// Full-scale defaults: 16-level 2^19 hashgrid, T=64, C=0.04, 300k steps.
Config full_preset();
/// Desk-scale preset for the synthetic toy scenes (2^12 hashgrid, T=16, 20k steps, 64x64 views).
Config desk_preset();
/// Named preset lookup: "full" or "desk". Throws ConfigError otherwise.
Config preset(const std::string& name);

nlohmann::json to_json(const Config& cfg);
Config config_from_json(const nlohmann::json& j);

/// Applies "a.b.c=value" overrides to a JSON config. Values are parsed as JSON
/// when possible and kept as strings otherwise. Unknown keys are rejected.
void apply_override(nlohmann::json& j, const std::string& assignment);

Config load_config(const std::filesystem::path& path);
void save_config(const Config& cfg, const std::filesystem::path& path);

} // namespace hollow
