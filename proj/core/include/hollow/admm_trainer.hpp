#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hollow/config.hpp"
#include "hollow/dataset.hpp"
#include "hollow/diff_optim.hpp"
#include "hollow/radiance_field.hpp"

namespace hollow {

struct PrunerState {
    PrunerMode mode = PrunerMode::none;
    double gamma = 0.0;
    double rho = 1e-3;
    double budget = 0.04;
    double lambda = 0.0;

    static PrunerState from_config(const PrunerConfig& cfg);
};

/// L + lambda * s
double l1_loss(double mse, double sparsity, double lambda);
template <typename T>
double l1_loss(double mse, const SaliencyGrid<T>& grid, double lambda) {
    return l1_loss(mse, static_cast<double>(grid.sparsity()), lambda);
}

/// L + (rho/2) [s - C]_+^2 + gamma (s - C), gamma held constant.
double augmented_loss(double mse, double sparsity, const PrunerState& pruner);
template <typename T>
double augmented_loss(double mse, const SaliencyGrid<T>& grid, const PrunerState& pruner) {
    return augmented_loss(mse, static_cast<double>(grid.sparsity()), pruner);
}

/// Regularizer added to the MSE for the pruner's mode (0 for none).
double sparsity_penalty(double sparsity, const PrunerState& pruner);
/// d(sparsity_penalty)/ds.
double sparsity_penalty_grad(double sparsity, const PrunerState& pruner);

/// gamma <- max(0, gamma + rho (s - C)); returns the new gamma.
double dual_update(PrunerState& pruner, double sparsity);

struct LossTerms {
    double loss = 0.0;
    double mse = 0.0;
    double sparsity = 1.0; // 1 when the saliency grid is disabled
};

/// Renders the batch, scores it against `targets` (3 per ray) and, when `backward`
/// is set, accumulates gradients of the full loss into the field's parameters.
/// The caller zeroes gradients.
template <typename T>
LossTerms loss_and_gradients(RadianceField<T>& field, SampleBatch<T>& batch, std::span<const T> targets,
                             const std::array<T, 3>& background, const PrunerState& pruner,
                             const FieldOptions& opts, bool backward = true);

struct StepReport {
    std::int64_t step = 0; // steps completed
    double loss = 0.0;
    double mse = 0.0;
    double sparsity = 1.0; // s from this step's forward pass
    double gamma = 0.0;    // after the dual update
    double alpha = 0.0;
    std::int64_t epoch = 0;
};

nlohmann::json to_json(const StepReport& r);

std::int64_t steps_per_epoch(const TrainConfig& cfg, std::size_t dataset_rays);

class Trainer {
public:
    Trainer(const Config& cfg, const Dataset& train);

    /// Replaces model, pruner, step counter and (when non-empty) Adam moments,
    /// e.g. from a checkpoint.
    void restore(RadianceField<float> model, const PrunerState& pruner, std::int64_t step,
                 std::vector<AdamState<float>> moments = {});

    /// One optimizer step on a random ray batch drawn from the training set.
    StepReport step();
    /// One optimizer step on caller-provided rays and targets (3 floats per ray).
    StepReport step(std::span<const Ray> rays, std::span<const float> targets);

    const Config& config() const { return cfg_; }
    const RadianceField<float>& model() const { return model_; }
    RadianceField<float>& model() { return model_; }
    const PrunerState& pruner() const { return pruner_; }
    const std::vector<AdamState<float>>& moments() const { return adam_; }
    std::int64_t step_count() const { return step_; }
    std::int64_t steps_per_epoch() const { return steps_per_epoch_; }
    std::int64_t epoch() const { return step_ / steps_per_epoch_; }
    double alpha() const;

private:
    Config cfg_;
    const Dataset* data_;
    RadianceField<float> model_;
    PrunerState pruner_;
    std::vector<AdamState<float>> adam_;
    std::mt19937_64 rng_;
    std::int64_t step_ = 0;
    std::int64_t steps_per_epoch_ = 1;
};

struct EvalResult {
    double mean_psnr = 0.0;
    double mean_mse = 0.0;
    std::vector<double> per_view_psnr;
    std::vector<double> per_view_mse;
};

nlohmann::json to_json(const EvalResult& r);

/// Render options for evaluation/rendering derived from a config (no jitter).
RenderOptions render_options(const Config& cfg, double alpha);

/// Renders the first `max_views` frames (all when 0) and scores them against the targets.
EvalResult evaluate(const RadianceField<float>& model, const Dataset& data, const RenderOptions& opts,
                    int max_views = 0);

struct TrainLoopOptions {
    std::filesystem::path out_dir;
    /// Held-out split for the periodic evaluations; the training split is used when null.
    const Dataset* eval_set = nullptr;
    std::function<void(const StepReport&)> on_step;
    std::function<void(const nlohmann::json&)> on_eval;
};

struct TrainOutputs {
    StepReport last;
    EvalResult final_eval;
    std::vector<nlohmann::json> metrics;
    std::filesystem::path checkpoint;
};

/// Runs cfg.train.steps steps, evaluating every eval_interval steps and after the last
/// one. Writes metrics.jsonl, train_log.jsonl (when log_interval > 0) and model.hnrf
/// into out_dir.
TrainOutputs train_loop(const Config& cfg, const Dataset& train, const TrainLoopOptions& opts);

} // namespace hollow
