#include "hollow/volume_renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hollow/error.hpp"

namespace hollow {

Camera Camera::from_fov(int width, int height, double camera_angle_x, const Mat4d& pose) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.focal = 0.5 * static_cast<double>(width) / std::tan(0.5 * camera_angle_x);
    cam.pose = pose;
    return cam;
}

void Camera::validate(double tol) const {
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double d = 0.0;
            for (int k = 0; k < 3; ++k) {
                d += pose[static_cast<std::size_t>(k * 4 + i)] * pose[static_cast<std::size_t>(k * 4 + j)];
            }
            const double expect = i == j ? 1.0 : 0.0;
            if (!(std::abs(d - expect) <= tol)) {
                throw DataError("camera pose rotation block is not orthonormal");
            }
        }
    }
}

Vec3d SceneBox::to_unit(const Vec3d& p) const {
    const double s = scale();
    return {(p[0] - center[0]) * s + 0.5, (p[1] - center[1]) * s + 0.5, (p[2] - center[2]) * s + 0.5};
}

Vec3d SceneBox::from_unit(const Vec3d& u) const {
    const double s = scale();
    return {(u[0] - 0.5) / s + center[0], (u[1] - 0.5) / s + center[1], (u[2] - 0.5) / s + center[2]};
}

std::optional<Ray> SceneBox::clip(const Ray& ray) const {
    double t0 = ray.near;
    double t1 = ray.far;
    for (int d = 0; d < 3; ++d) {
        const double lo = center[d] - bound;
        const double hi = center[d] + bound;
        const double o = ray.origin[d];
        const double dir = ray.direction[d];
        if (dir == 0.0) {
            if (o < lo || o > hi) return std::nullopt;
            continue;
        }
        double ta = (lo - o) / dir;
        double tb = (hi - o) / dir;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) {
        return std::nullopt;
    }
    Ray out = ray;
    out.near = t0;
    out.far = t1;
    return out;
}

Ray ray_for_pixel(const Camera& cam, double px, double py, double near, double far) {
    const double cx = 0.5 * cam.width;
    const double cy = 0.5 * cam.height;
    const Vec3d local{(px + 0.5 - cx) / cam.focal, -(py + 0.5 - cy) / cam.focal, -1.0};
    const auto& m = cam.pose;
    Vec3d world{m[0] * local[0] + m[1] * local[1] + m[2] * local[2],
                m[4] * local[0] + m[5] * local[1] + m[6] * local[2],
                m[8] * local[0] + m[9] * local[1] + m[10] * local[2]};
    Ray r;
    r.origin = cam.origin();
    r.direction = normalized(world);
    r.near = near;
    r.far = far;
    return r;
}

std::vector<Ray> rays_from_camera(const Camera& cam, std::span<const std::uint32_t> pixels, double near,
                                  double far) {
    std::vector<Ray> rays;
    rays.reserve(pixels.size());
    const auto total = static_cast<std::uint32_t>(cam.width * cam.height);
    for (std::uint32_t idx : pixels) {
        if (idx >= total) {
            throw UsageError("pixel index " + std::to_string(idx) + " out of bounds");
        }
        const auto w = static_cast<std::uint32_t>(cam.width);
        rays.push_back(ray_for_pixel(cam, idx % w, idx / w, near, far));
    }
    return rays;
}

RaySamples stratified_samples(const Ray& ray, int n, bool jitter, std::mt19937_64* rng) {
    if (n < 1) {
        throw UsageError("stratified_samples: n must be >= 1");
    }
    RaySamples s;
    s.t.resize(static_cast<std::size_t>(n));
    s.delta.resize(static_cast<std::size_t>(n));
    const double bin = (ray.far - ray.near) / n;
    for (int k = 0; k < n; ++k) {
        double offset = 0.5 * bin;
        if (jitter && rng) {
            offset = bin * (static_cast<double>((*rng)() >> 11) * 0x1.0p-53);
        }
        s.t[static_cast<std::size_t>(k)] = ray.near + k * bin + offset;
    }
    for (int k = 0; k + 1 < n; ++k) {
        s.delta[static_cast<std::size_t>(k)] = s.t[static_cast<std::size_t>(k) + 1] - s.t[static_cast<std::size_t>(k)];
    }
    s.delta.back() = ray.far - s.t.back();
    return s;
}

template <typename T>
std::vector<T> composite_weights(std::span<const T> sigma, std::span<const T> delta, T* t_end) {
    std::vector<T> w(sigma.size());
    T trans = T(1);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (!std::isfinite(sigma[i])) {
            throw NumericalError("composite: non-finite density at sample " + std::to_string(i));
        }
        const T keep = std::exp(-sigma[i] * delta[i]);
        w[i] = trans * (T(1) - keep);
        trans *= keep;
    }
    if (t_end) *t_end = trans;
    return w;
}

template <typename T>
CompositeResult<T> composite(std::span<const T> sigma, std::span<const T> rgb, std::span<const T> delta,
                             const std::array<T, 3>& background) {
    CompositeResult<T> out;
    T trans = T(1);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (!std::isfinite(sigma[i])) {
            throw NumericalError("composite: non-finite density at sample " + std::to_string(i));
        }
        const T keep = std::exp(-sigma[i] * delta[i]);
        const T w = trans * (T(1) - keep);
        for (int k = 0; k < 3; ++k) {
            out.rgb[static_cast<std::size_t>(k)] += w * rgb[i * 3 + static_cast<std::size_t>(k)];
        }
        trans *= keep;
    }
    for (int k = 0; k < 3; ++k) {
        out.rgb[static_cast<std::size_t>(k)] += trans * background[static_cast<std::size_t>(k)];
    }
    out.transmittance = trans;
    out.opacity = T(1) - trans;
    return out;
}

template <typename T>
void composite_backward(std::span<const T> sigma, std::span<const T> rgb, std::span<const T> delta,
                        const std::array<T, 3>& background, const std::array<T, 3>& dpixel, std::span<T> dsigma,
                        std::span<T> drgb) {
    const std::size_t n = sigma.size();
    // Forward sweep for T_i and weights.
    std::vector<T> trans(n + 1);
    std::vector<T> weight(n);
    trans[0] = T(1);
    for (std::size_t i = 0; i < n; ++i) {
        const T keep = std::exp(-sigma[i] * delta[i]);
        weight[i] = trans[i] * (T(1) - keep);
        trans[i + 1] = trans[i] * keep;
    }
    // dC/dsigma_i = delta_i * (T_{i+1} c_i - S_i), S_i = sum_{j>i} w_j c_j + T_end * bg.
    T suffix = T(0);
    for (int k = 0; k < 3; ++k) {
        suffix += dpixel[static_cast<std::size_t>(k)] * trans[n] * background[static_cast<std::size_t>(k)];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        T c_dot = T(0);
        for (int k = 0; k < 3; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            c_dot += dpixel[kk] * rgb[ii * 3 + kk];
            drgb[ii * 3 + kk] = weight[ii] * dpixel[kk];
        }
        dsigma[ii] = delta[ii] * (trans[ii + 1] * c_dot - suffix);
        suffix += weight[ii] * c_dot;
    }
}

double mse_loss(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw UsageError("mse_loss: shape mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    if (a.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

double psnr(double mse) {
    if (mse < 0.0 || std::isnan(mse)) {
        throw UsageError("psnr: mse must be non-negative");
    }
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -10.0 * std::log10(mse);
}

#define HOLLOW_INSTANTIATE(T)                                                                                    \
    template std::vector<T> composite_weights<T>(std::span<const T>, std::span<const T>, T*);                   \
    template CompositeResult<T> composite<T>(std::span<const T>, std::span<const T>, std::span<const T>,        \
                                             const std::array<T, 3>&);                                          \
    template void composite_backward<T>(std::span<const T>, std::span<const T>, std::span<const T>,             \
                                        const std::array<T, 3>&, const std::array<T, 3>&, std::span<T>,         \
                                        std::span<T>);

HOLLOW_INSTANTIATE(float)
HOLLOW_INSTANTIATE(double)

#undef HOLLOW_INSTANTIATE

} // namespace hollow
