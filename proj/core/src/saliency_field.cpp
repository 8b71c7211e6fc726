#include "hollow/saliency_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hollow/error.hpp"
#include "hollow/hash_encoding.hpp"

namespace hollow {

template <typename T>
SaliencyGrid<T>::SaliencyGrid(int resolution) : res_(resolution) {
    if (resolution < 2) {
        throw ConfigError("saliency grid resolution must be >= 2");
    }
    const auto n = static_cast<std::size_t>(resolution);
    raw_ = seeded_init<T>({n, n, n}, InitSpec::ones(), 0, ParamRole::saliency);
}

template <typename T>
std::size_t SaliencyGrid<T>::node_index(int x, int y, int z) const {
    const auto n = static_cast<std::size_t>(res_);
    return static_cast<std::size_t>(x) + n * (static_cast<std::size_t>(y) + n * static_cast<std::size_t>(z));
}

template <typename T>
SaliencyLookup<T> SaliencyGrid<T>::lookup(const Vec3<T>& x_in) const {
    Vec3<T> x = x_in;
    clamp_unit(x);
    const int cells = res_ - 1;
    std::array<int, 3> base{};
    Vec3<T> frac{};
    for (int d = 0; d < 3; ++d) {
        const T pos = x[d] * static_cast<T>(cells);
        const int cell = std::clamp(static_cast<int>(std::floor(pos)), 0, cells - 1);
        base[d] = cell;
        frac[d] = pos - static_cast<T>(cell);
    }
    SaliencyLookup<T> q;
    q.weight = trilinear_weights(frac);
    T g = T(0);
    for (int c = 0; c < 8; ++c) {
        const std::size_t idx = node_index(base[0] + (c & 1), base[1] + ((c >> 1) & 1), base[2] + ((c >> 2) & 1));
        q.node[c] = static_cast<std::uint32_t>(idx);
        g += q.weight[c] * raw_.values[idx];
    }
    q.p = sigmoid(g);
    return q;
}

template <typename T>
void SaliencyGrid<T>::backward(const SaliencyLookup<T>& q, T dp, std::span<T> grads) const {
    const T dg = dp * q.p * (T(1) - q.p);
    for (int c = 0; c < 8; ++c) {
        grads[q.node[c]] += dg * q.weight[c];
    }
}

template <typename T>
T SaliencyGrid<T>::sparsity() const {
    // Accumulate in double so the mean is independent of T's precision at large grids.
    double sum = 0.0;
    for (T g : raw_.values) {
        sum += static_cast<double>(sigmoid(g));
    }
    return static_cast<T>(sum / static_cast<double>(raw_.values.size()));
}

template <typename T>
void SaliencyGrid<T>::sparsity_backward(T ds) {
    const T scale = ds / static_cast<T>(raw_.values.size());
    for (std::size_t i = 0; i < raw_.values.size(); ++i) {
        const T p = sigmoid(raw_.values[i]);
        raw_.grads[i] += scale * p * (T(1) - p);
    }
}

template <typename T>
std::vector<T> SaliencyGrid<T>::slice(int axis, int index) const {
    if (axis < 0 || axis > 2) {
        throw UsageError("slice axis must be 0, 1 or 2 (got " + std::to_string(axis) + ")");
    }
    if (index < 0 || index >= res_) {
        throw UsageError("slice index " + std::to_string(index) + " outside [0, " + std::to_string(res_) + ")");
    }
    const int a = axis == 0 ? 1 : 0;
    const int b = axis == 2 ? 1 : 2;
    std::vector<T> img(static_cast<std::size_t>(res_) * static_cast<std::size_t>(res_));
    for (int r = 0; r < res_; ++r) {
        for (int c = 0; c < res_; ++c) {
            std::array<int, 3> ijk{};
            ijk[static_cast<std::size_t>(axis)] = index;
            ijk[static_cast<std::size_t>(a)] = c;
            ijk[static_cast<std::size_t>(b)] = r;
            img[static_cast<std::size_t>(r) * static_cast<std::size_t>(res_) + static_cast<std::size_t>(c)] =
                sigmoid(raw_.values[node_index(ijk[0], ijk[1], ijk[2])]);
        }
    }
    return img;
}

template <typename T>
void apply_saliency(T p, std::span<const T> f, std::span<T> v) {
    for (std::size_t i = 0; i < f.size(); ++i) {
        v[i] = p * f[i];
    }
}

template <typename T>
T apply_saliency_backward(T p, std::span<const T> f, std::span<const T> dv, std::span<T> df) {
    T dp = T(0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        dp += f[i] * dv[i];
        df[i] += p * dv[i];
    }
    return dp;
}

template class SaliencyGrid<float>;
template class SaliencyGrid<double>;
template void apply_saliency<float>(float, std::span<const float>, std::span<float>);
template void apply_saliency<double>(double, std::span<const double>, std::span<double>);
template float apply_saliency_backward<float>(float, std::span<const float>, std::span<const float>,
                                              std::span<float>);
template double apply_saliency_backward<double>(double, std::span<const double>, std::span<const double>,
                                                std::span<double>);

} // namespace hollow
