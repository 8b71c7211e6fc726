#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hollow/math.hpp"

namespace hollow {

/// Pinhole camera in the NeRF-synthetic (Blender) convention: -z forward, +y up.
struct Camera {
    int width = 0;
    int height = 0;
    double focal = 0.0;
    Mat4d pose{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}; // camera-to-world, row-major

    static Camera from_fov(int width, int height, double camera_angle_x, const Mat4d& pose);

    Vec3d origin() const { return {pose[3], pose[7], pose[11]}; }
    /// Throws DataError if the rotation block is not orthonormal within tol.
    void validate(double tol = 1e-4) const;
};

struct Ray {
    Vec3d origin{};
    Vec3d direction{0, 0, -1};
    double near = 2.0;
    double far = 6.0;
};

/// Affine map from dataset coordinates to the unit cube used by the encodings.
/// The cube [center - bound, center + bound]^3 lands on [margin, 1 - margin]^3.
struct SceneBox {
    Vec3d center{0, 0, 0};
    double bound = 1.5;
    double margin = 0.05;

    double scale() const { return (1.0 - 2.0 * margin) / (2.0 * bound); }
    Vec3d to_unit(const Vec3d& p) const;
    Vec3d from_unit(const Vec3d& u) const;
    /// Restricts [ray.near, ray.far] to the part inside the bound cube.
    /// Returns nullopt when the ray misses it.
    std::optional<Ray> clip(const Ray& ray) const;
};

/// Ray through the center of pixel (px, py).
Ray ray_for_pixel(const Camera& cam, double px, double py, double near, double far);

/// One ray per flat pixel index (row-major, index = py * width + px).
std::vector<Ray> rays_from_camera(const Camera& cam, std::span<const std::uint32_t> pixels, double near,
                                  double far);

/// Sample distances along one ray and the interval each one represents.
struct RaySamples {
    std::vector<double> t;
    std::vector<double> delta;
};

/// n stratified samples: bin k spans [near + k*d, near + (k+1)*d], d = (far-near)/n;
/// the sample sits at the bin midpoint, or uniformly inside the bin when jittered.
/// delta_i = t_{i+1} - t_i with the last delta = far - t_n.
RaySamples stratified_samples(const Ray& ray, int n, bool jitter, std::mt19937_64* rng);

template <typename T>
struct CompositeResult {
    std::array<T, 3> rgb{};
    T opacity = T(0);
    T transmittance = T(1); // T_end
};

/// Emission-absorption quadrature: a_i = 1 - exp(-sigma_i delta_i),
/// T_i = prod_{j<i}(1 - a_j), color = sum T_i a_i c_i + T_end * background.
/// `rgb` holds 3 values per sample. Throws NumericalError on non-finite sigma.
template <typename T>
CompositeResult<T> composite(std::span<const T> sigma, std::span<const T> rgb, std::span<const T> delta,
                             const std::array<T, 3>& background);

/// Compositing weights T_i * a_i per sample (length n) and T_end.
template <typename T>
std::vector<T> composite_weights(std::span<const T> sigma, std::span<const T> delta, T* t_end = nullptr);

/// Exact adjoint of composite(): writes dL/dsigma (n) and dL/drgb (3n) for upstream dL/dpixel.
template <typename T>
void composite_backward(std::span<const T> sigma, std::span<const T> rgb, std::span<const T> delta,
                        const std::array<T, 3>& background, const std::array<T, 3>& dpixel, std::span<T> dsigma,
                        std::span<T> drgb);

/// Mean squared error over all elements. Throws UsageError on length mismatch.
double mse_loss(std::span<const float> a, std::span<const float> b);

/// -10 log10(mse); +infinity for mse == 0. Throws UsageError on negative input.
double psnr(double mse);

} // namespace hollow
