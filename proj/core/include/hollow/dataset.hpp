#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "hollow/image_io.hpp"
#include "hollow/volume_renderer.hpp"

namespace hollow {

struct Frame {
    std::string file_path; // as written in the transforms file
    Camera camera;
    Image image; // RGB, alpha already composited
};

struct Dataset {
    std::string split = "train";
    double camera_angle_x = 0.0;
    std::vector<Frame> frames;
    SceneBox box;
    std::array<double, 3> background{1.0, 1.0, 1.0};

    int width() const { return frames.empty() ? 0 : frames.front().camera.width; }
    int height() const { return frames.empty() ? 0 : frames.front().camera.height; }
    std::size_t ray_count() const;
    /// Throws DataError when frames disagree on resolution.
    void validate() const;
};

/// NeRF-synthetic transforms file: camera_angle_x, frames[].file_path (".png" appended when
/// there is no extension, relative to the file's directory) and frames[].transform_matrix.
/// Optional scene_center / scene_bound / scene_margin keys override the default scene box.
Dataset load_transforms_json(const std::filesystem::path& path, const std::array<double, 3>& background,
                             const std::string& split = "train");

/// Loads transforms_<split>.json from a dataset directory, falling back to transforms.json.
Dataset load_split(const std::filesystem::path& dir, const std::string& split,
                   const std::array<double, 3>& background);

/// Writes <dir>/transforms_<split>.json and <dir>/<split>/r_<i>.png.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);

} // namespace hollow
