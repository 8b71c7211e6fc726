#pragma once

#include <array>
#include <cmath>

namespace hollow {

template <typename T>
using Vec3 = std::array<T, 3>;

using Vec3d = Vec3<double>;

/// 4x4 matrix stored row-major.
using Mat4d = std::array<double, 16>;

template <typename T>
constexpr T dot(const Vec3<T>& a, const Vec3<T>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <typename T>
T norm(const Vec3<T>& a) {
    return std::sqrt(dot(a, a));
}

template <typename T>
Vec3<T> normalized(const Vec3<T>& a) {
    const T n = norm(a);
    return {a[0] / n, a[1] / n, a[2] / n};
}

template <typename T>
constexpr Vec3<T> operator+(const Vec3<T>& a, const Vec3<T>& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

template <typename T>
constexpr Vec3<T> operator-(const Vec3<T>& a, const Vec3<T>& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

template <typename T>
constexpr Vec3<T> operator*(T s, const Vec3<T>& a) {
    return {s * a[0], s * a[1], s * a[2]};
}

template <typename T>
constexpr Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

/// log(1 + exp(x)) without overflow for large x.
template <typename T>
T softplus(T x) {
    return x > T(20) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Trilinear cell lookup: the 8 corner offsets of a cell in (x, y, z) bit order
/// and their interpolation weights for fractional position `frac`.
template <typename T>
constexpr std::array<T, 8> trilinear_weights(const Vec3<T>& frac) {
    std::array<T, 8> w{};
    for (int c = 0; c < 8; ++c) {
        T weight = T(1);
        for (int d = 0; d < 3; ++d) {
            weight *= (c >> d) & 1 ? frac[d] : T(1) - frac[d];
        }
        w[c] = weight;
    }
    return w;
}

} // namespace hollow
