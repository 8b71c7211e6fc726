#include "hollow/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hollow/diff_optim.hpp"
#include "hollow/error.hpp"

namespace hollow {

std::string to_string(SceneKind kind) {
    switch (kind) {
    case SceneKind::empty: return "empty";
    case SceneKind::solid_sphere: return "solid_sphere";
    case SceneKind::hollow_sphere: return "hollow_sphere";
    case SceneKind::box: return "box";
    case SceneKind::two_blob: return "two_blob";
    }
    return "?";
}

SceneKind parse_scene_kind(const std::string& s) {
    if (s == "empty") return SceneKind::empty;
    if (s == "solid_sphere") return SceneKind::solid_sphere;
    if (s == "hollow_sphere") return SceneKind::hollow_sphere;
    if (s == "box") return SceneKind::box;
    if (s == "two_blob") return SceneKind::two_blob;
    throw UsageError("unknown scene '" + s + "' (expected empty|solid_sphere|hollow_sphere|box|two_blob)");
}

namespace {

// Smooth indicator of d > 0.
double inside(double d, double edge) { return 1.0 / (1.0 + std::exp(-d / edge)); }

} // namespace

double SyntheticScene::sigma(const Vec3d& x) const {
    const Vec3d d = x - center;
    const double r = norm(d);
    switch (kind) {
    case SceneKind::empty: return 0.0;
    case SceneKind::solid_sphere: return density * inside(radius - r, edge);
    case SceneKind::hollow_sphere:
        return density * inside(radius - r, edge) * inside(r - (radius - thickness), edge);
    case SceneKind::box: {
        double m = 1e300;
        for (int k = 0; k < 3; ++k) m = std::min(m, half_extent[k] - std::abs(d[k]));
        return density * inside(m, edge);
    }
    case SceneKind::two_blob: return density * inside(blob_radius - norm(x - blob2), edge);
    }
    return 0.0;
}

Vec3d SyntheticScene::color(const Vec3d& x) const {
    const Vec3d c = kind == SceneKind::two_blob ? blob2 : center;
    const Vec3d d = x - c;
    const double r = norm(d);
    const Vec3d n = r > 0.0 ? (1.0 / r) * d : Vec3d{0, 0, 1};
    return {0.5 + 0.4 * n[0], 0.5 + 0.4 * n[1], 0.5 + 0.4 * n[2]};
}

double SyntheticScene::bounding_radius() const {
    const double pad = 40.0 * edge;
    switch (kind) {
    case SceneKind::empty: return 0.0;
    case SceneKind::solid_sphere:
    case SceneKind::hollow_sphere: return radius + pad;
    case SceneKind::box: return norm(half_extent) + pad;
    case SceneKind::two_blob: return std::max(norm(blob1 - center), norm(blob2 - center)) + blob_radius + pad;
    }
    return 0.0;
}

Mat4d look_at(const Vec3d& eye, const Vec3d& target) {
    const Vec3d back = normalized(eye - target);
    Vec3d up{0, 0, 1};
    if (std::abs(dot(back, up)) > 0.999) up = {0, 1, 0};
    const Vec3d right = normalized(cross(up, back));
    const Vec3d cam_up = cross(back, right);
    return {right[0], cam_up[0], back[0], eye[0], right[1], cam_up[1], back[1], eye[1],
            right[2], cam_up[2], back[2], eye[2], 0,        0,         0,       1};
}

Image oracle_render(const SyntheticScene& scene, const Camera& cam, int n_dense,
                    const std::array<double, 3>& background, double near, double far) {
    if (n_dense < 1) {
        throw UsageError("oracle_render: n_dense must be >= 1");
    }
    Image img(cam.width, cam.height, 3);
    const double br = scene.bounding_radius();
    std::vector<double> sigma(static_cast<std::size_t>(n_dense));
    std::vector<double> rgb(static_cast<std::size_t>(n_dense) * 3);
    std::vector<double> delta(static_cast<std::size_t>(n_dense));
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            Ray ray = ray_for_pixel(cam, x, y, near, far);
            // Restrict to the bounding sphere; outside it the field is empty.
            const Vec3d oc = ray.origin - scene.center;
            const double b = dot(oc, ray.direction);
            const double disc = b * b - (dot(oc, oc) - br * br);
            std::array<double, 3> px = background;
            if (br > 0.0 && disc > 0.0) {
                const double t0 = std::max(near, -b - std::sqrt(disc));
                const double t1 = std::min(far, -b + std::sqrt(disc));
                if (t1 > t0) {
                    ray.near = t0;
                    ray.far = t1;
                    const RaySamples s = stratified_samples(ray, n_dense, false, nullptr);
                    for (std::size_t k = 0; k < s.t.size(); ++k) {
                        const Vec3d p = ray.origin + s.t[k] * ray.direction;
                        sigma[k] = scene.sigma(p);
                        const Vec3d c = scene.color(p);
                        for (std::size_t j = 0; j < 3; ++j) rgb[k * 3 + j] = c[j];
                        delta[k] = s.delta[k];
                    }
                    px = composite<double>(sigma, rgb, delta, background).rgb;
                }
            }
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(px[static_cast<std::size_t>(c)]);
        }
    }
    return img;
}

Dataset gen_synthetic(const SyntheticScene& scene, const CameraRig& rig, const std::string& split,
                      const std::array<double, 3>& background, int n_dense) {
    if (rig.views < 1 || rig.width < 1 || rig.height < 1) {
        throw UsageError("gen_synthetic: views and resolution must be positive");
    }
    std::uint64_t stream = 0;
    for (char ch : split) stream = stream * 131 + static_cast<unsigned char>(ch);
    std::mt19937_64 rng(mix_seed(rig.seed, stream));
    std::normal_distribution<double> normal(0.0, 1.0);

    Dataset data;
    data.split = split;
    data.camera_angle_x = rig.camera_angle_x;
    data.background = background;
    for (int i = 0; i < rig.views; ++i) {
        Vec3d dir{normal(rng), normal(rng), normal(rng)};
        dir = normalized(dir);
        const Vec3d eye = scene.center + rig.distance * dir;
        Frame f;
        f.file_path = "./" + split + "/r_" + std::to_string(i);
        f.camera = Camera::from_fov(rig.width, rig.height, rig.camera_angle_x, look_at(eye, scene.center));
        f.image = oracle_render(scene, f.camera, n_dense, background);
        data.frames.push_back(std::move(f));
    }
    return data;
}

} // namespace hollow
