#include "hollow/dataset.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hollow/error.hpp"

namespace hollow {

using nlohmann::json;

std::size_t Dataset::ray_count() const {
    std::size_t n = 0;
    for (const auto& f : frames) n += static_cast<std::size_t>(f.camera.width) * f.camera.height;
    return n;
}

void Dataset::validate() const {
    for (const auto& f : frames) {
        if (f.camera.width != width() || f.camera.height != height()) {
            throw DataError("frame " + f.file_path + " has resolution " + std::to_string(f.camera.width) + "x" +
                            std::to_string(f.camera.height) + ", expected " + std::to_string(width()) + "x" +
                            std::to_string(height()));
        }
        if (f.image.width != f.camera.width || f.image.height != f.camera.height || f.image.channels != 3) {
            throw DataError("frame " + f.file_path + ": image does not match its camera");
        }
    }
}

namespace {

Mat4d parse_matrix(const json& m, const std::string& where) {
    if (!m.is_array() || m.size() != 4) {
        throw DataError(where + ": transform_matrix must be a 4x4 array");
    }
    Mat4d out{};
    for (std::size_t r = 0; r < 4; ++r) {
        if (!m[r].is_array() || m[r].size() != 4) {
            throw DataError(where + ": transform_matrix row " + std::to_string(r) + " must have 4 entries");
        }
        for (std::size_t c = 0; c < 4; ++c) {
            if (!m[r][c].is_number()) {
                throw DataError(where + ": transform_matrix entries must be numbers");
            }
            out[r * 4 + c] = m[r][c].get<double>();
            if (!std::isfinite(out[r * 4 + c])) {
                throw DataError(where + ": non-finite transform_matrix entry");
            }
        }
    }
    return out;
}

double det3(const Mat4d& m) {
    return m[0] * (m[5] * m[10] - m[6] * m[9]) - m[1] * (m[4] * m[10] - m[6] * m[8]) +
           m[2] * (m[4] * m[9] - m[5] * m[8]);
}

} // namespace

Dataset load_transforms_json(const std::filesystem::path& path, const std::array<double, 3>& background,
                             const std::string& split) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw DataError(path.string() + " is not a JSON object");
    }
    if (!j.contains("camera_angle_x") || !j["camera_angle_x"].is_number()) {
        throw DataError(path.string() + ": missing numeric 'camera_angle_x'");
    }
    if (!j.contains("frames") || !j["frames"].is_array()) {
        throw DataError(path.string() + ": missing 'frames' array");
    }
    Dataset data;
    data.split = split;
    data.background = background;
    data.camera_angle_x = j["camera_angle_x"].get<double>();
    if (!(data.camera_angle_x > 0.0 && data.camera_angle_x < M_PI)) {
        throw DataError(path.string() + ": camera_angle_x out of range");
    }
    if (j.contains("scene_center")) data.box.center = j["scene_center"].get<Vec3d>();
    if (j.contains("scene_bound")) data.box.bound = j["scene_bound"].get<double>();
    if (j.contains("scene_margin")) data.box.margin = j["scene_margin"].get<double>();

    const auto base = path.parent_path();
    std::size_t idx = 0;
    for (const auto& fr : j["frames"]) {
        const std::string where = path.string() + " frame " + std::to_string(idx++);
        if (!fr.contains("file_path") || !fr["file_path"].is_string()) {
            throw DataError(where + ": missing 'file_path'");
        }
        if (!fr.contains("transform_matrix")) {
            throw DataError(where + ": missing 'transform_matrix'");
        }
        Frame f;
        f.file_path = fr["file_path"].get<std::string>();
        std::filesystem::path img_path = base / f.file_path;
        if (!img_path.has_extension()) img_path += ".png";
        const Mat4d pose = parse_matrix(fr["transform_matrix"], where);
        if (std::abs(det3(pose)) < 1e-8) {
            throw DataError(where + ": pose rotation block is not invertible");
        }
        f.image = composite_over(read_png(img_path), background);
        f.camera = Camera::from_fov(f.image.width, f.image.height, data.camera_angle_x, pose);
        try {
            f.camera.validate();
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        data.frames.push_back(std::move(f));
    }
    data.validate();
    return data;
}

Dataset load_split(const std::filesystem::path& dir, const std::string& split,
                   const std::array<double, 3>& background) {
    auto path = dir / ("transforms_" + split + ".json");
    if (!std::filesystem::exists(path)) {
        path = dir / "transforms.json";
    }
    if (!std::filesystem::exists(path)) {
        throw DataError("no transforms_" + split + ".json or transforms.json in " + dir.string());
    }
    return load_transforms_json(path, background, split);
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / data.split);
    json j;
    j["camera_angle_x"] = data.camera_angle_x;
    j["scene_center"] = data.box.center;
    j["scene_bound"] = data.box.bound;
    j["scene_margin"] = data.box.margin;
    j["frames"] = json::array();
    for (std::size_t i = 0; i < data.frames.size(); ++i) {
        const Frame& f = data.frames[i];
        const std::string rel = "./" + data.split + "/r_" + std::to_string(i);
        write_png(f.image, dir / (data.split + "/r_" + std::to_string(i) + ".png"));
        json m = json::array();
        for (std::size_t r = 0; r < 4; ++r) {
            m.push_back({f.camera.pose[r * 4], f.camera.pose[r * 4 + 1], f.camera.pose[r * 4 + 2],
                         f.camera.pose[r * 4 + 3]});
        }
        j["frames"].push_back({{"file_path", rel}, {"transform_matrix", m}});
    }
    const auto path = dir / ("transforms_" + data.split + ".json");
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) {
        throw DataError("write failed for " + path.string());
    }
}

} // namespace hollow
