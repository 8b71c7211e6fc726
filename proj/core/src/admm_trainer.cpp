#include "hollow/admm_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hollow/checkpoint.hpp"
#include "hollow/error.hpp"
#include "hollow/parallel.hpp"

namespace hollow {

using nlohmann::json;

PrunerState PrunerState::from_config(const PrunerConfig& cfg) {
    PrunerState p;
    p.mode = cfg.mode;
    p.gamma = cfg.gamma_init;
    p.rho = cfg.rho;
    p.budget = cfg.budget;
    p.lambda = cfg.lambda;
    return p;
}

double l1_loss(double mse, double sparsity, double lambda) { return mse + lambda * sparsity; }

double augmented_loss(double mse, double sparsity, const PrunerState& pruner) {
    const double r = sparsity - pruner.budget;
    const double pos = std::max(0.0, r);
    return mse + 0.5 * pruner.rho * pos * pos + pruner.gamma * r;
}

double sparsity_penalty(double sparsity, const PrunerState& pruner) {
    switch (pruner.mode) {
    case PrunerMode::none: return 0.0;
    case PrunerMode::l1: return l1_loss(0.0, sparsity, pruner.lambda);
    case PrunerMode::admm: return augmented_loss(0.0, sparsity, pruner);
    }
    return 0.0;
}

double sparsity_penalty_grad(double sparsity, const PrunerState& pruner) {
    switch (pruner.mode) {
    case PrunerMode::none: return 0.0;
    case PrunerMode::l1: return pruner.lambda;
    case PrunerMode::admm: return pruner.rho * std::max(0.0, sparsity - pruner.budget) + pruner.gamma;
    }
    return 0.0;
}

double dual_update(PrunerState& pruner, double sparsity) {
    pruner.gamma = std::max(0.0, pruner.gamma + pruner.rho * (sparsity - pruner.budget));
    return pruner.gamma;
}

template <typename T>
LossTerms loss_and_gradients(RadianceField<T>& field, SampleBatch<T>& batch, std::span<const T> targets,
                             const std::array<T, 3>& background, const PrunerState& pruner,
                             const FieldOptions& opts, bool backward) {
    const std::size_t rays = batch.ray_count();
    if (targets.size() != rays * 3) {
        throw UsageError("loss: " + std::to_string(targets.size()) + " target values for " + std::to_string(rays) +
                         " rays");
    }
    FieldCache<T> cache;
    field.forward(batch, opts, backward ? &cache : nullptr);

    LossTerms terms;
    std::vector<T> dsigma(backward ? batch.sample_count() : 0);
    std::vector<T> drgb(backward ? batch.sample_count() * 3 : 0);
    const double norm = rays == 0 ? 0.0 : 1.0 / static_cast<double>(rays * 3);
    double sq = 0.0;
    for (std::size_t r = 0; r < rays; ++r) {
        const std::size_t b = batch.ray_offsets[r];
        const std::size_t n = batch.ray_offsets[r + 1] - b;
        const auto sig = std::span<const T>(batch.sigma).subspan(b, n);
        const auto rgb = std::span<const T>(batch.rgb).subspan(b * 3, n * 3);
        const auto del = std::span<const T>(batch.delta).subspan(b, n);
        const auto px = composite<T>(sig, rgb, del, background);
        std::array<T, 3> dpixel{};
        for (std::size_t k = 0; k < 3; ++k) {
            const double d = static_cast<double>(px.rgb[k]) - static_cast<double>(targets[r * 3 + k]);
            sq += d * d;
            dpixel[k] = static_cast<T>(2.0 * d * norm);
        }
        if (backward && n > 0) {
            composite_backward<T>(sig, rgb, del, background, dpixel, std::span<T>(dsigma).subspan(b, n),
                                  std::span<T>(drgb).subspan(b * 3, n * 3));
        }
    }
    terms.mse = sq * norm;
    terms.loss = terms.mse;
    if (field.has_saliency()) {
        terms.sparsity = static_cast<double>(field.saliency().sparsity());
        terms.loss += sparsity_penalty(terms.sparsity, pruner);
    }
    if (!std::isfinite(terms.loss)) {
        return terms;
    }
    if (backward) {
        field.backward(batch, dsigma, drgb, opts, cache);
        if (field.has_saliency() && pruner.mode != PrunerMode::none) {
            field.saliency().sparsity_backward(static_cast<T>(sparsity_penalty_grad(terms.sparsity, pruner)));
        }
    }
    return terms;
}

json to_json(const StepReport& r) {
    return {{"step", r.step},   {"loss", r.loss},   {"mse", r.mse},    {"sparsity", r.sparsity},
            {"gamma", r.gamma}, {"alpha", r.alpha}, {"epoch", r.epoch}};
}

std::int64_t steps_per_epoch(const TrainConfig& cfg, std::size_t dataset_rays) {
    if (cfg.steps_per_epoch > 0) return cfg.steps_per_epoch;
    const auto per = static_cast<std::size_t>(cfg.rays_per_step);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>((dataset_rays + per - 1) / per));
}

Trainer::Trainer(const Config& cfg, const Dataset& train)
    : cfg_(cfg), data_(&train), model_(cfg.model, cfg.train.seed), pruner_(PrunerState::from_config(cfg.pruner)),
      rng_(mix_seed(cfg.train.seed, 300)) {
    cfg_.validate();
    if (train.frames.empty()) {
        throw DataError("training split '" + train.split + "' has no frames");
    }
    steps_per_epoch_ = hollow::steps_per_epoch(cfg_.train, train.ray_count());
    const AdamConfig ac{cfg_.train.lr, cfg_.train.beta1, cfg_.train.beta2, cfg_.train.eps};
    for (const auto* p : model_.parameters()) adam_.emplace_back(p->size(), ac);
}

void Trainer::restore(RadianceField<float> model, const PrunerState& pruner, std::int64_t step,
                      std::vector<AdamState<float>> moments) {
    model_ = std::move(model);
    pruner_ = pruner;
    step_ = step;
    if (!moments.empty()) {
        adam_ = std::move(moments);
    } else {
        const AdamConfig ac{cfg_.train.lr, cfg_.train.beta1, cfg_.train.beta2, cfg_.train.eps};
        adam_.clear();
        for (const auto* p : model_.parameters()) adam_.emplace_back(p->size(), ac);
    }
    rng_.seed(mix_seed(cfg_.train.seed, 300 + static_cast<std::uint64_t>(step)));
}

double Trainer::alpha() const { return alpha_schedule(epoch(), cfg_.model.gate); }

StepReport Trainer::step() {
    const std::size_t total = data_->ray_count();
    const auto w = static_cast<std::size_t>(data_->width());
    const std::size_t per_frame = w * static_cast<std::size_t>(data_->height());
    const auto n = static_cast<std::size_t>(cfg_.train.rays_per_step);
    std::vector<Ray> rays;
    std::vector<float> targets;
    rays.reserve(n);
    targets.reserve(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = static_cast<std::size_t>(rng_() % total);
        const Frame& f = data_->frames[idx / per_frame];
        const std::size_t pix = idx % per_frame;
        rays.push_back(ray_for_pixel(f.camera, static_cast<double>(pix % w), static_cast<double>(pix / w),
                                     cfg_.render.near, cfg_.render.far));
        for (std::size_t k = 0; k < 3; ++k) targets.push_back(f.image.data[pix * 3 + k]);
    }
    return step(rays, targets);
}

StepReport Trainer::step(std::span<const Ray> rays, std::span<const float> targets) {
    FieldOptions opts;
    opts.alpha = alpha();
    opts.threads = cfg_.train.threads == 0 ? default_thread_count() : cfg_.train.threads;
    auto batch = build_samples<float>(rays, data_->box, cfg_.train.samples_per_ray, true, &rng_);
    const std::array<float, 3> bg{static_cast<float>(cfg_.render.background[0]),
                                  static_cast<float>(cfg_.render.background[1]),
                                  static_cast<float>(cfg_.render.background[2])};
    model_.zero_grads();
    const LossTerms terms = loss_and_gradients<float>(model_, batch, targets, bg, pruner_, opts, true);
    if (!std::isfinite(terms.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << step_ << ": loss=" << terms.loss << " mse=" << terms.mse
            << " sparsity=" << terms.sparsity << " gamma=" << pruner_.gamma << " alpha=" << opts.alpha;
        throw NumericalError(msg.str());
    }
    double lr = cfg_.train.lr;
    if (cfg_.train.lr_decay && cfg_.train.steps > 0) {
        lr *= std::pow(cfg_.train.lr_decay_final,
                       static_cast<double>(step_) / static_cast<double>(cfg_.train.steps));
    }
    auto params = model_.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        adam_[i].config.lr = lr;
        adam_step(*params[i], adam_[i]);
    }
    if (pruner_.mode == PrunerMode::admm) {
        dual_update(pruner_, terms.sparsity);
    }
    StepReport rep;
    rep.alpha = opts.alpha;
    ++step_;
    rep.step = step_;
    rep.loss = terms.loss;
    rep.mse = terms.mse;
    rep.sparsity = terms.sparsity;
    rep.gamma = pruner_.gamma;
    rep.epoch = epoch();
    return rep;
}

json to_json(const EvalResult& r) {
    return {{"mean_psnr", r.mean_psnr},
            {"mean_mse", r.mean_mse},
            {"per_view_psnr", r.per_view_psnr},
            {"per_view_mse", r.per_view_mse}};
}

RenderOptions render_options(const Config& cfg, double alpha) {
    RenderOptions o;
    o.samples_per_ray = cfg.render.samples_per_ray > 0 ? cfg.render.samples_per_ray : cfg.train.samples_per_ray;
    o.near = cfg.render.near;
    o.far = cfg.render.far;
    o.background = cfg.render.background;
    o.field.alpha = alpha;
    o.field.skip_threshold = cfg.render.saliency_skip ? cfg.render.skip_threshold : 0.0;
    o.field.threads = cfg.train.threads == 0 ? default_thread_count() : cfg.train.threads;
    return o;
}

EvalResult evaluate(const RadianceField<float>& model, const Dataset& data, const RenderOptions& opts,
                    int max_views) {
    if (data.frames.empty()) {
        throw DataError("evaluation split '" + data.split + "' has no frames");
    }
    std::size_t views = data.frames.size();
    if (max_views > 0) views = std::min(views, static_cast<std::size_t>(max_views));
    EvalResult res;
    for (std::size_t i = 0; i < views; ++i) {
        const Frame& f = data.frames[i];
        const auto img = render_view(model, f.camera, data.box, opts);
        const double mse = mse_loss(img, f.image.data);
        res.per_view_mse.push_back(mse);
        res.per_view_psnr.push_back(psnr(mse));
        res.mean_mse += mse;
        res.mean_psnr += res.per_view_psnr.back();
    }
    res.mean_mse /= static_cast<double>(views);
    res.mean_psnr /= static_cast<double>(views);
    return res;
}

namespace {

void append_line(const std::filesystem::path& path, const json& record) {
    std::ofstream out(path, std::ios::app);
    out << record.dump() << '\n';
    if (!out) {
        throw DataError("write failed for " + path.string());
    }
}

} // namespace

TrainOutputs train_loop(const Config& cfg, const Dataset& train, const TrainLoopOptions& opts) {
    std::filesystem::create_directories(opts.out_dir);
    const auto metrics_path = opts.out_dir / "metrics.jsonl";
    const auto log_path = opts.out_dir / "train_log.jsonl";
    std::filesystem::remove(metrics_path);
    std::filesystem::remove(log_path);

    Trainer trainer(cfg, train);
    const Dataset& eval_set = opts.eval_set ? *opts.eval_set : train;
    TrainOutputs out;
    out.last.gamma = trainer.pruner().gamma;
    out.last.alpha = trainer.alpha();
    if (trainer.model().has_saliency()) {
        out.last.sparsity = static_cast<double>(trainer.model().saliency().sparsity());
    }

    auto run_eval = [&](const StepReport& rep, bool final_eval) {
        const int views = final_eval ? 0 : cfg.train.eval_views;
        const EvalResult ev = evaluate(trainer.model(), eval_set, render_options(cfg, trainer.alpha()), views);
        json rec = {{"step", trainer.step_count()},
                    {"psnr", ev.mean_psnr},
                    {"mse", ev.mean_mse},
                    {"sparsity", trainer.model().has_saliency()
                                     ? static_cast<double>(trainer.model().saliency().sparsity())
                                     : 1.0},
                    {"gamma", rep.gamma},
                    {"alpha", trainer.alpha()},
                    {"epoch", trainer.epoch()},
                    {"steps_per_epoch", trainer.steps_per_epoch()},
                    {"views", ev.per_view_psnr.size()}};
        append_line(metrics_path, rec);
        out.metrics.push_back(rec);
        if (opts.on_eval) opts.on_eval(rec);
        return ev;
    };

    const std::int64_t steps = cfg.train.steps;
    for (std::int64_t s = 0; s < steps; ++s) {
        out.last = trainer.step();
        if (opts.on_step) opts.on_step(out.last);
        if (cfg.train.log_interval > 0 && out.last.step % cfg.train.log_interval == 0) {
            append_line(log_path, to_json(out.last));
        }
        if (cfg.train.eval_interval > 0 && out.last.step % cfg.train.eval_interval == 0 && out.last.step != steps) {
            run_eval(out.last, false);
        }
    }
    out.final_eval = run_eval(out.last, true);

    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.box = train.box;
    ckpt.step = trainer.step_count();
    ckpt.epoch = trainer.epoch();
    ckpt.gamma = trainer.pruner().gamma;
    ckpt.model = trainer.model();
    ckpt.moments = trainer.moments();
    out.checkpoint = opts.out_dir / "model.hnrf";
    save_checkpoint(ckpt, out.checkpoint);
    return out;
}

template LossTerms loss_and_gradients<float>(RadianceField<float>&, SampleBatch<float>&, std::span<const float>,
                                             const std::array<float, 3>&, const PrunerState&, const FieldOptions&,
                                             bool);
template LossTerms loss_and_gradients<double>(RadianceField<double>&, SampleBatch<double>&,
                                              std::span<const double>, const std::array<double, 3>&,
                                              const PrunerState&, const FieldOptions&, bool);

} // namespace hollow
