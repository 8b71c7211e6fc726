#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hollow/diff_optim.hpp"
#include "hollow/math.hpp"

namespace hollow {

/// One saliency query: the 8 surrounding nodes, their weights, and p.
template <typename T>
struct SaliencyLookup {
    std::array<std::uint32_t, 8> node{};
    std::array<T, 8> weight{};
    T p = T(0);
};

/// T x T x T grid of raw (pre-sigmoid) saliency values. Nodes sit on the
/// corners of a (T-1)^3 cell lattice spanning the unit cube, x fastest.
template <typename T>
class SaliencyGrid {
public:
    SaliencyGrid() = default;
    /// Initialized to all ones.
    explicit SaliencyGrid(int resolution);

    int resolution() const { return res_; }
    std::size_t node_count() const { return raw_.size(); }
    std::size_t node_index(int x, int y, int z) const;

    ParamTensor<T>& params() { return raw_; }
    const ParamTensor<T>& params() const { return raw_; }

    /// p = sigmoid(trilinear(g, x * (T-1))), x clamped to the unit cube.
    SaliencyLookup<T> lookup(const Vec3<T>& x) const;
    T weight(const Vec3<T>& x) const { return lookup(x).p; }

    /// Accumulates dL/dg_i = dp * p(1-p) * w_i into `grads`.
    void backward(const SaliencyLookup<T>& q, T dp, std::span<T> grads) const;
    void backward(const SaliencyLookup<T>& q, T dp) { backward(q, dp, raw_.grads); }

    /// Mean of sigmoid(g) over all nodes, in (0,1).
    T sparsity() const;
    /// Accumulates ds * p_i(1-p_i) / T^3 into every node gradient.
    void sparsity_backward(T ds);

    /// T x T image of sigmoid(g) at slice `index` along `axis` (0=x, 1=y, 2=z).
    /// Row r, column c of the image hold the node whose remaining two axes are
    /// (c, r) in increasing axis order. Throws UsageError on bad axis/index.
    std::vector<T> slice(int axis, int index) const;

private:
    int res_ = 0;
    ParamTensor<T> raw_;
};

/// v = p * f.
template <typename T>
void apply_saliency(T p, std::span<const T> f, std::span<T> v);

/// Adjoint of apply_saliency: df += p * dv, returns dp = <f, dv>.
template <typename T>
T apply_saliency_backward(T p, std::span<const T> f, std::span<const T> dv, std::span<T> df);

} // namespace hollow
