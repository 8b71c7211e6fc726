#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "hollow/dataset.hpp"

namespace hollow {

enum class SceneKind { empty, solid_sphere, hollow_sphere, box, two_blob };

std::string to_string(SceneKind kind);
SceneKind parse_scene_kind(const std::string& s);

/// Closed-form density/color fields in dataset coordinates. Surfaces are smoothed with
/// a logistic profile of width `edge` so dense quadrature converges.
struct SyntheticScene {
    SceneKind kind = SceneKind::hollow_sphere;
    Vec3d center{0, 0, 0};
    double radius = 0.65;
    /// Shell thickness of the hollow sphere.
    double thickness = 0.15;
    double density = 400.0;
    double edge = 0.01;
    Vec3d half_extent{0.5, 0.4, 0.3};
    /// two_blob: blob 1 carries zero density, only blob 2 is visible.
    Vec3d blob1{-0.45, 0.0, 0.0};
    Vec3d blob2{0.45, 0.0, 0.0};
    double blob_radius = 0.3;

    double sigma(const Vec3d& x) const;
    /// Color depends only on the outward direction from the object's center.
    Vec3d color(const Vec3d& x) const;
    /// Radius of a sphere around `center` outside which sigma is negligible.
    double bounding_radius() const;
};

struct CameraRig {
    int views = 40;
    int width = 64;
    int height = 64;
    double camera_angle_x = 0.6911112070083618;
    double distance = 4.0;
    std::uint64_t seed = 0;
};

/// Look-at pose (Blender convention) for a camera at `eye` facing `target`, z up.
Mat4d look_at(const Vec3d& eye, const Vec3d& target);

/// Reference image by midpoint quadrature with n_dense samples over the part of each ray
/// inside the scene's bounding sphere, composited with the shared renderer code.
Image oracle_render(const SyntheticScene& scene, const Camera& cam, int n_dense,
                    const std::array<double, 3>& background, double near = 2.0, double far = 6.0);

/// Cameras at uniformly random directions on a sphere of radius rig.distance, looking
/// at the scene center; the split name selects an independent camera stream.
Dataset gen_synthetic(const SyntheticScene& scene, const CameraRig& rig, const std::string& split,
                      const std::array<double, 3>& background = {1.0, 1.0, 1.0}, int n_dense = 512);

} // namespace hollow
