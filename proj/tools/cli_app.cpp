#include "cli_app.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "hollow/admm_trainer.hpp"
#include "hollow/checkpoint.hpp"
#include "hollow/config.hpp"
#include "hollow/dataset.hpp"
#include "hollow/error.hpp"
#include "hollow/image_io.hpp"
#include "hollow/synthetic.hpp"

namespace hollow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    f << j.dump(2) << '\n';
    if (!f) {
        throw DataError("write failed for " + path.string());
    }
}

std::string fmt_count(std::size_t n) { return fmt::format("{:.2f}M", static_cast<double>(n) / 1e6); }

/// Options shared by commands that build a configuration.
struct ConfigFlags {
    std::string preset = "desk";
    std::string config_path;
    std::vector<std::string> sets;
    std::string pruner;
    std::string gate;
    std::string saliency;
    std::optional<int> threads;
    std::optional<std::int64_t> steps;
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App& app) {
        app.add_option("--preset", preset, "Base preset: desk or full")->capture_default_str();
        app.add_option("--config", config_path, "JSON config file layered over the preset");
        app.add_option("--set", sets, "Override a config value, e.g. --set train.lr=0.005")->take_all();
        app.add_option("--pruner", pruner, "Sparsity pruner")->check(CLI::IsMember({"none", "l1", "admm"}));
        app.add_option("--gate", gate, "Zero-skipping gate")->check(CLI::IsMember({"none", "hard", "soft"}));
        app.add_option("--saliency", saliency, "Saliency grid")->check(CLI::IsMember({"on", "off"}));
        app.add_option("--threads", threads, "Worker threads (results do not depend on it)");
        app.add_option("--steps", steps, "Optimizer steps");
        app.add_option("--seed", seed, "Random seed");
    }

    Config resolve() const {
        json j = to_json(hollow::preset(preset));
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) {
                throw ConfigError("cannot open config file " + config_path);
            }
            const json patch = json::parse(f, nullptr, false);
            if (patch.is_discarded()) {
                throw ConfigError("config file " + config_path + " is not valid JSON");
            }
            config_from_json(patch); // rejects unknown keys early
            j.merge_patch(patch);
        }
        for (const auto& s : sets) apply_override(j, s);
        if (!pruner.empty()) apply_override(j, "pruner.mode=\"" + pruner + "\"");
        if (!gate.empty()) apply_override(j, "model.gate.mode=\"" + gate + "\"");
        if (!saliency.empty()) apply_override(j, std::string("model.saliency=") + (saliency == "on" ? "true" : "false"));
        if (threads) apply_override(j, "train.threads=" + std::to_string(*threads));
        if (steps) apply_override(j, "train.steps=" + std::to_string(*steps));
        if (seed) apply_override(j, "train.seed=" + std::to_string(*seed));
        if (!saliency.empty() && saliency == "off" && pruner.empty()) {
            apply_override(j, "pruner.mode=\"none\"");
        }
        return config_from_json(j);
    }
};

std::vector<std::array<double, 4>> parse_plane_list(const std::string& text) {
    std::array<double, 4> pl{};
    std::stringstream ss(text);
    std::string item;
    int k = 0;
    while (std::getline(ss, item, ',')) {
        if (k >= 4) throw UsageError("--slice-plane expects 4 comma-separated numbers a,b,c,d");
        try {
            pl[static_cast<std::size_t>(k++)] = std::stod(item);
        } catch (const std::exception&) {
            throw UsageError("--slice-plane: '" + item + "' is not a number");
        }
    }
    if (k != 4) throw UsageError("--slice-plane expects 4 comma-separated numbers a,b,c,d");
    return {pl};
}

/// Pose file: {"camera_angle_x", "width", "height", "frames": [{"transform_matrix": 4x4}]}.
std::vector<Camera> load_pose_file(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open pose file " + path.string());
    const json j = json::parse(f, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError("pose file " + path.string() + " is not a JSON object");
    std::vector<Camera> cams;
    try {
        const double fov = j.at("camera_angle_x").get<double>();
        const int w = j.at("width").get<int>();
        const int h = j.at("height").get<int>();
        if (w < 1 || h < 1 || !(fov > 0.0 && fov < M_PI)) throw DataError("pose file: bad width/height/fov");
        for (const auto& fr : j.at("frames")) {
            const auto rows = fr.at("transform_matrix").get<std::vector<std::vector<double>>>();
            if (rows.size() != 4) throw DataError("pose file: transform_matrix must be 4x4");
            Mat4d m{};
            for (std::size_t r = 0; r < 4; ++r) {
                if (rows[r].size() != 4) throw DataError("pose file: transform_matrix must be 4x4");
                for (std::size_t c = 0; c < 4; ++c) m[r * 4 + c] = rows[r][c];
            }
            Camera cam = Camera::from_fov(w, h, fov, m);
            cam.validate();
            cams.push_back(cam);
        }
    } catch (const json::exception& e) {
        throw DataError("pose file " + path.string() + ": " + e.what());
    }
    if (cams.empty()) throw DataError("pose file " + path.string() + " has no frames");
    return cams;
}

Image to_image(const std::vector<float>& rgb, int w, int h) {
    Image img(w, h, 3);
    img.data = rgb;
    return img;
}

int cmd_gen(const std::string& scene_name, const fs::path& out_dir, int views, int test_views, int width, int height,
            std::uint64_t seed, int n_dense, const SyntheticScene& overrides, std::ostream& out) {
    SyntheticScene scene = overrides;
    scene.kind = parse_scene_kind(scene_name);
    CameraRig rig;
    rig.width = width;
    rig.height = height;
    rig.seed = seed;
    rig.views = views;
    const Dataset train = gen_synthetic(scene, rig, "train", {1.0, 1.0, 1.0}, n_dense);
    save_dataset(train, out_dir);
    rig.views = test_views;
    const Dataset test = gen_synthetic(scene, rig, "test", {1.0, 1.0, 1.0}, n_dense);
    save_dataset(test, out_dir);
    const json meta = {{"scene", to_string(scene.kind)},
                       {"radius", scene.radius},
                       {"thickness", scene.thickness},
                       {"density", scene.density},
                       {"edge", scene.edge},
                       {"views", views},
                       {"test_views", test_views},
                       {"width", width},
                       {"height", height},
                       {"seed", seed},
                       {"n_dense", n_dense}};
    write_json(out_dir / "scene.json", meta);
    fmt::print(out, "wrote {} train + {} test views of '{}' ({}x{}) to {}\n", views, test_views, scene_name, width,
               height, out_dir.string());
    return ok;
}

int cmd_train(const ConfigFlags& flags, const fs::path& data_dir, const fs::path& out_dir, bool quiet,
              std::ostream& out) {
    const Config cfg = flags.resolve();
    fs::create_directories(out_dir);
    save_config(cfg, out_dir / "config.json");
    const Dataset train = load_split(data_dir, "train", cfg.render.background);
    std::optional<Dataset> test;
    if (fs::exists(data_dir / "transforms_test.json")) {
        test = load_split(data_dir, "test", cfg.render.background);
    }
    TrainLoopOptions lo;
    lo.out_dir = out_dir;
    lo.eval_set = test ? &*test : nullptr;
    if (!quiet) {
        lo.on_eval = [&](const json& rec) {
            fmt::print(out, "step {:>7}  psnr {:7.3f} dB  sparsity {:.4f}  gamma {:.5g}  epoch {}\n",
                       rec["step"].get<std::int64_t>(), rec["psnr"].get<double>(), rec["sparsity"].get<double>(),
                       rec["gamma"].get<double>(), rec["epoch"].get<std::int64_t>());
        };
    }
    const TrainOutputs res = train_loop(cfg, train, lo);
    const auto params = param_count(cfg.model);
    const json report = {{"steps", res.last.step},
                         {"final_psnr", res.final_eval.mean_psnr},
                         {"final_mse", res.final_eval.mean_mse},
                         {"per_view_psnr", res.final_eval.per_view_psnr},
                         {"sparsity", res.metrics.back()["sparsity"]},
                         {"budget", cfg.pruner.budget},
                         {"gamma", res.last.gamma},
                         {"epoch", res.metrics.back()["epoch"]},
                         {"eval_split", test ? "test" : "train"},
                         {"params", params.total()},
                         {"pruner", to_string(cfg.pruner.mode)},
                         {"gate", to_string(cfg.model.gate.mode)},
                         {"saliency", cfg.model.saliency_enabled},
                         {"checkpoint", res.checkpoint.string()}};
    write_json(out_dir / "report.json", report);
    fmt::print(out, "final: psnr {:.3f} dB on {} split, sparsity {:.4f} (C={}), params {}\n",
               res.final_eval.mean_psnr, test ? "test" : "train", report["sparsity"].get<double>(),
               cfg.pruner.budget, fmt_count(params.total()));
    return ok;
}

/// One row per run directory, read from its report.json.
json summarize_runs(const std::vector<fs::path>& runs) {
    json rows = json::array();
    for (const auto& dir : runs) {
        std::ifstream f(dir / "report.json");
        if (!f) throw DataError("no report.json in " + dir.string());
        json r = json::parse(f, nullptr, false);
        if (r.is_discarded()) throw DataError("report.json in " + dir.string() + " is not valid JSON");
        r["run"] = dir.filename().string();
        rows.push_back(r);
    }
    return rows;
}

std::string metrics_table(const json& rows) {
    std::string md = "| run | pruner | gate | saliency | params | sparsity | gamma | psnr (dB) |\n"
                     "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        md += fmt::format("| {} | {} | {} | {} | {} | {:.4f} | {:.4g} | {:.3f} |\n", r["run"].get<std::string>(),
                          r["pruner"].get<std::string>(), r["gate"].get<std::string>(),
                          r["saliency"].get<bool>() ? "on" : "off", fmt_count(r["params"].get<std::size_t>()),
                          r["sparsity"].get<double>(), r["gamma"].get<double>(), r["final_psnr"].get<double>());
    }
    return md;
}

int cmd_summarize(const std::vector<std::string>& run_dirs, const std::string& out_path, std::ostream& out) {
    if (run_dirs.empty()) throw UsageError("summarize needs at least one run directory");
    const json rows = summarize_runs({run_dirs.begin(), run_dirs.end()});
    const std::string md = metrics_table(rows);
    if (!out_path.empty()) {
        fs::path p(out_path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream f(p);
        f << md;
        if (!f) throw DataError("write failed for " + p.string());
        write_json(fs::path(out_path).replace_extension(".json"), rows);
    }
    out << md;
    return ok;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& key, const std::vector<std::string>& values,
              const fs::path& data_dir, const fs::path& out_dir, std::ostream& out) {
    if (key.empty() || values.empty()) throw UsageError("sweep needs --key and at least one --values entry");
    std::vector<fs::path> runs;
    for (const auto& v : values) {
        ConfigFlags f = flags;
        f.sets.push_back(key + "=" + v);
        const fs::path dir = out_dir / fmt::format("{}={}", key, v);
        std::ostringstream quiet_out;
        cmd_train(f, data_dir, dir, true, quiet_out);
        fmt::print(out, "{}={}: {}", key, v, quiet_out.str());
        runs.push_back(dir);
    }
    json rows = summarize_runs(runs);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i]["value"] = values[i];
    write_json(out_dir / "sweep.json", {{"key", key}, {"runs", rows}});
    const std::string md = metrics_table(rows);
    std::ofstream(out_dir / "sweep.md") << md;
    out << md;
    return ok;
}

Checkpoint load_ckpt(const std::string& path) {
    if (path.empty()) throw UsageError("--ckpt is required");
    return load_checkpoint(path);
}

int cmd_render(const std::string& ckpt_path, const std::string& data_dir, const std::string& split,
               const std::string& poses, const std::string& plane, bool skip, int views, const fs::path& out_dir,
               std::ostream& out) {
    const Checkpoint ckpt = load_ckpt(ckpt_path);
    RenderOptions ro = render_options(ckpt.config, alpha_schedule(ckpt.epoch, ckpt.config.model.gate));
    if (!plane.empty()) ro.field.clip_plane = parse_plane_list(plane).front();
    if (skip) ro.field.skip_threshold = ckpt.config.render.skip_threshold;
    std::vector<Camera> cams;
    std::optional<Dataset> data;
    SceneBox box = ckpt.box;
    if (!poses.empty()) {
        cams = load_pose_file(poses);
    } else if (!data_dir.empty()) {
        data = load_split(data_dir, split, ckpt.config.render.background);
        for (const auto& f : data->frames) cams.push_back(f.camera);
    } else {
        throw UsageError("render needs --poses FILE or --data DIR");
    }
    if (views > 0 && static_cast<std::size_t>(views) < cams.size()) cams.resize(static_cast<std::size_t>(views));
    fs::create_directories(out_dir);
    json rec = {{"checkpoint", ckpt_path}, {"images", json::array()}, {"config", to_json(ckpt.config)}};
    if (ro.field.clip_plane) rec["slice_plane"] = *ro.field.clip_plane;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const auto rgb = render_view(ckpt.model, cams[i], box, ro);
        const auto file = out_dir / fmt::format("view_{:03d}.png", i);
        write_png(to_image(rgb, cams[i].width, cams[i].height), file);
        json item = {{"file", file.string()}};
        if (data && plane.empty()) {
            const double m = mse_loss(rgb, data->frames[i].image.data);
            item["mse"] = m;
            item["psnr"] = psnr(m);
            fmt::print(out, "{}  psnr {:.3f} dB\n", file.string(), item["psnr"].get<double>());
        } else {
            fmt::print(out, "{}\n", file.string());
        }
        rec["images"].push_back(item);
    }
    write_json(out_dir / "render.json", rec);
    return ok;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& split, bool skip,
             const std::string& json_out, std::ostream& out) {
    const Checkpoint ckpt = load_ckpt(ckpt_path);
    if (data_dir.empty()) throw UsageError("eval needs --data DIR");
    const Dataset data = load_split(data_dir, split, ckpt.config.render.background);
    if (data.frames.empty()) throw DataError("split '" + split + "' is empty");
    RenderOptions ro = render_options(ckpt.config, alpha_schedule(ckpt.epoch, ckpt.config.model.gate));
    if (skip) ro.field.skip_threshold = ckpt.config.render.skip_threshold;
    const EvalResult ev = evaluate(ckpt.model, data, ro);
    json rec = to_json(ev);
    rec["split"] = split;
    rec["step"] = ckpt.step;
    rec["checkpoint"] = ckpt_path;
    fmt::print(out, "{} split: mean psnr {:.4f} dB, mean mse {:.6g} over {} views\n", split, ev.mean_psnr,
               ev.mean_mse, ev.per_view_psnr.size());
    if (!json_out.empty()) write_json(json_out, rec);
    out << rec.dump() << '\n';
    return ok;
}

int axis_from(const std::string& s) {
    if (s == "x" || s == "0") return 0;
    if (s == "y" || s == "1") return 1;
    if (s == "z" || s == "2") return 2;
    throw UsageError("--axis must be x, y or z");
}

int cmd_slice(const std::string& ckpt_path, const std::string& axis_name, std::optional<int> index_opt, int scale,
              const fs::path& png_out, std::ostream& out) {
    const Checkpoint ckpt = load_ckpt(ckpt_path);
    if (!ckpt.model.has_saliency()) {
        throw UsageError("checkpoint was trained with saliency=off; there is no saliency grid to slice");
    }
    const int axis = axis_from(axis_name);
    const int t = ckpt.model.saliency().resolution();
    const int index = index_opt.value_or(t / 2);
    const auto values = ckpt.model.saliency().slice(axis, index);
    if (scale < 1) throw UsageError("--scale must be >= 1");
    Image img(t * scale, t * scale, 1);
    double mean = 0.0;
    double lo = 1.0;
    double hi = 0.0;
    std::size_t below = 0;
    for (int r = 0; r < t; ++r) {
        for (int c = 0; c < t; ++c) {
            const float v = values[static_cast<std::size_t>(r * t + c)];
            mean += v;
            lo = std::min(lo, static_cast<double>(v));
            hi = std::max(hi, static_cast<double>(v));
            if (v < 0.1f) ++below;
            for (int dy = 0; dy < scale; ++dy) {
                for (int dx = 0; dx < scale; ++dx) img.at(c * scale + dx, r * scale + dy, 0) = v;
            }
        }
    }
    mean /= static_cast<double>(values.size());
    write_png(img, png_out);
    const json rec = {{"axis", axis},       {"index", index}, {"resolution", t},       {"mean", mean},
                      {"min", lo},          {"max", hi},      {"below_0_1", below},    {"file", png_out.string()},
                      {"values", values}};
    auto json_path = png_out;
    json_path.replace_extension(".json");
    write_json(json_path, rec);
    fmt::print(out, "slice axis {} index {} of {}: mean p {:.4f}, {} of {} below 0.1 -> {}\n", axis, index, t, mean,
               below, values.size(), png_out.string());
    return ok;
}

int cmd_info(const ConfigFlags& flags, bool table, const std::string& json_out, std::ostream& out) {
    json rec;
    if (table) {
        // Parameter totals over hashgrid sizes 2^14..2^19 without saliency and with T = 64, 96, 128.
        const Config base = full_preset();
        const std::vector<std::optional<int>> rows{std::nullopt, 64, 96, 128};
        fmt::print(out, "{:<12}", "method");
        for (int k = 14; k <= 19; ++k) fmt::print(out, "{:>10}", fmt::format("2^{}", k));
        fmt::print(out, "\n");
        rec["rows"] = json::array();
        for (const auto& row : rows) {
            const std::string name = row ? fmt::format("T={}", *row) : "no saliency";
            fmt::print(out, "{:<12}", name);
            json r = {{"method", name}, {"totals", json::array()}};
            for (int k = 14; k <= 19; ++k) {
                HashGridConfig h = base.model.hashgrid;
                h.log2_table_size = k;
                ModelConfig m = base.model;
                m.hashgrid = h;
                const auto pc = param_count(h, m.decoder_layout(), row);
                fmt::print(out, "{:>10}", fmt_count(pc.total()));
                r["totals"].push_back(pc.total());
            }
            fmt::print(out, "\n");
            rec["rows"].push_back(r);
        }
    } else {
        const Config cfg = flags.resolve();
        const auto pc = param_count(cfg.model);
        rec = {{"hashgrid", pc.hashgrid}, {"mlp", pc.mlp}, {"saliency", pc.saliency}, {"total", pc.total()}};
        rec["config"] = to_json(cfg);
        fmt::print(out, "hashgrid  {:>12}  (L={}, F={}, table 2^{})\n", pc.hashgrid, cfg.model.hashgrid.levels,
                   cfg.model.hashgrid.feature_dim, cfg.model.hashgrid.log2_table_size);
        fmt::print(out, "mlp       {:>12}\n", pc.mlp);
        if (cfg.model.saliency_enabled) {
            fmt::print(out, "saliency  {:>12}  (T={})\n", pc.saliency, cfg.model.saliency_res);
        } else {
            fmt::print(out, "saliency  {:>12}  (off)\n", 0);
        }
        fmt::print(out, "total     {:>12}  ({})\n", pc.total(), fmt_count(pc.total()));
    }
    if (!json_out.empty()) write_json(json_out, rec);
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"HollowNeRF: hash-grid radiance fields with a sparsified saliency grid"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Write a synthetic dataset (transforms + PNGs)");
    std::string scene_name = "hollow_sphere";
    std::string gen_out;
    int views = 40, test_views = 10, width = 64, height = 64, n_dense = 512;
    std::uint64_t gen_seed = 0;
    SyntheticScene scene;
    gen->add_option("--scene", scene_name, "empty|solid_sphere|hollow_sphere|box|two_blob")->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--views", views, "Training views")->capture_default_str();
    gen->add_option("--test-views", test_views, "Test views")->capture_default_str();
    gen->add_option("--width", width)->capture_default_str();
    gen->add_option("--height", height)->capture_default_str();
    gen->add_option("--seed", gen_seed)->capture_default_str();
    gen->add_option("--n-dense", n_dense, "Oracle quadrature samples per ray")->capture_default_str();
    gen->add_option("--radius", scene.radius)->capture_default_str();
    gen->add_option("--thickness", scene.thickness)->capture_default_str();
    gen->add_option("--density", scene.density)->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Train a model on a dataset directory");
    ConfigFlags train_flags;
    train_flags.add_to(*train);
    std::string data_dir, train_out;
    bool quiet = false;
    train->add_option("--data", data_dir, "Dataset directory")->required();
    train->add_option("--out", train_out, "Output directory")->required();
    train->add_flag("--quiet", quiet, "Suppress progress lines");

    // render
    auto* render = app.add_subcommand("render", "Render views from a checkpoint");
    std::string ckpt, render_data, split = "test", poses, plane, render_out;
    bool skip = false;
    int render_views = 0;
    render->add_option("--ckpt", ckpt)->required();
    render->add_option("--data", render_data, "Dataset directory providing cameras (and targets)");
    render->add_option("--split", split)->capture_default_str();
    render->add_option("--poses", poses, "Pose file with camera_angle_x, width, height and frames");
    render->add_option("--slice-plane", plane, "a,b,c,d: drop samples with a*x+b*y+c*z+d > 0");
    render->add_option("--views", render_views, "Render only the first N cameras");
    render->add_flag("--saliency-skip", skip, "Skip samples whose saliency is below the threshold");
    render->add_option("--out", render_out)->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    std::string eval_json;
    eval->add_option("--ckpt", ckpt)->required();
    eval->add_option("--data", render_data)->required();
    eval->add_option("--split", split)->capture_default_str();
    eval->add_flag("--saliency-skip", skip);
    eval->add_option("--json", eval_json, "Write the metrics JSON here");

    // slice
    auto* slice = app.add_subcommand("slice", "Export one saliency-grid slice as a PNG");
    std::string axis = "z", slice_out;
    std::optional<int> index;
    int scale = 8;
    slice->add_option("--ckpt", ckpt)->required();
    slice->add_option("--axis", axis)->capture_default_str();
    slice->add_option("--index", index, "Slice index (default T/2)");
    slice->add_option("--scale", scale, "Pixels per grid node")->capture_default_str();
    slice->add_option("--out", slice_out, "PNG path")->required();

    // info
    auto* info = app.add_subcommand("info", "Parameter counts for a configuration");
    ConfigFlags info_flags;
    info_flags.add_to(*info);
    bool table = false;
    std::string info_json;
    info->add_flag("--table", table, "Totals over hashgrid sizes 2^14..2^19 and T in {none, 64, 96, 128}");
    info->add_option("--json", info_json, "Write the counts as JSON here");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Train once per value of one config key and tabulate the results");
    ConfigFlags sweep_flags;
    sweep_flags.add_to(*sweep);
    std::string sweep_key, sweep_data, sweep_out;
    std::vector<std::string> sweep_values;
    sweep->add_option("--key", sweep_key, "Config key, e.g. pruner.rho")->required();
    sweep->add_option("--values", sweep_values, "Values to try")->required()->delimiter(',');
    sweep->add_option("--data", sweep_data, "Dataset directory")->required();
    sweep->add_option("--out", sweep_out, "Output directory; one run per value")->required();

    // summarize
    auto* summarize = app.add_subcommand("summarize", "Metrics table over finished run directories");
    std::vector<std::string> run_dirs;
    std::string summary_out;
    summarize->add_option("runs", run_dirs, "Run directories containing report.json")->required();
    summarize->add_option("--out", summary_out, "Write the markdown table here (and a .json beside it)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }

    try {
        if (*gen) return cmd_gen(scene_name, gen_out, views, test_views, width, height, gen_seed, n_dense, scene, out);
        if (*train) return cmd_train(train_flags, data_dir, train_out, quiet, out);
        if (*render) return cmd_render(ckpt, render_data, split, poses, plane, skip, render_views, render_out, out);
        if (*eval) return cmd_eval(ckpt, render_data, split, skip, eval_json, out);
        if (*slice) return cmd_slice(ckpt, axis, index, scale, slice_out, out);
        if (*info) return cmd_info(info_flags, table, info_json, out);
        if (*sweep) return cmd_sweep(sweep_flags, sweep_key, sweep_values, sweep_data, sweep_out, out);
        if (*summarize) return cmd_summarize(run_dirs, summary_out, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return usage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const IntegrityError& e) {
        err << "integrity error: " << e.what() << '\n';
        return data;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return data;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return numerical;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        return data;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }
    return usage;
}

} // namespace hollow::cli
