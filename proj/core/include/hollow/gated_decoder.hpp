#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hollow/diff_optim.hpp"
#include "hollow/math.hpp"

namespace hollow {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class GateMode { none, hard, soft };

std::string to_string(GateMode mode);
GateMode parse_gate_mode(const std::string& s);

struct GateConfig {
    GateMode mode = GateMode::soft;
    double alpha_low = 1e4;
    double alpha_high = 1e5;
    /// Epochs strictly below this use alpha_low.
    std::int64_t epoch_threshold = 1000;
};

/// Gate steepness for the given epoch: alpha_low below the threshold, alpha_high from it on.
double alpha_schedule(std::int64_t epoch, const GateConfig& gate = {});

/// Real spherical harmonics through degree 3 of a unit direction (16 values).
/// Non-unit inputs are normalized first.
template <typename T>
std::array<T, 16> sh_encode(const Vec3<T>& dir);

/// tanh(alpha * ||v||).
template <typename T>
T soft_gate(std::span<const T> v, T alpha);

/// 0 if ||v|| == 0 exactly, else 1. Its gradient is zero everywhere.
template <typename T>
T hard_gate(std::span<const T> v);

/// Layer sizes of the density and color networks. Each has two hidden ReLU
/// layers without bias; output layers carry biases.
struct DecoderLayout {
    static constexpr int dir_dim = 16;
    int input_dim = 32;
    int hidden = 64;
    int geo_dim = 15;

    int density_out() const { return 1 + geo_dim; }
    int color_in() const { return geo_dim + dir_dim; }
    std::size_t param_count() const;
};

/// Parameter tensor order, also the checkpoint order.
enum DecoderParam : int {
    density_w0 = 0,
    density_w1,
    density_w2,
    density_b2,
    color_w0,
    color_w1,
    color_w2,
    color_b2,
    decoder_param_count
};

/// Activations kept from a batched forward pass for the backward pass.
template <typename T>
struct DecoderCache {
    RowMatrix<T> v;       // [B, in]
    RowMatrix<T> h1, h2;  // density hidden
    RowMatrix<T> out;     // [B, 1 + geo] raw density-net output
    RowMatrix<T> cin;     // [B, geo + 16]
    RowMatrix<T> g1, g2;  // color hidden
    RowMatrix<T> rgb;     // [B, 3] after sigmoid
    std::vector<T> gate;  // per row
    std::vector<T> vnorm; // per row
};

/// Weight-gradient buffers shaped like the decoder parameters.
template <typename T>
struct DecoderGrads {
    std::array<RowMatrix<T>, decoder_param_count> g;

    void reset(const DecoderLayout& layout);
};

template <typename T>
struct DecoderOutput {
    T sigma = T(0);
    std::array<T, 3> rgb{};
};

/// Density/color MLP pair with a multiplicative zero-skipping gate on density:
/// sigma = gate(v) * softplus(raw), rgb = sigmoid(color_net(geo, sh(dir))).
template <typename T>
class GatedDecoder {
public:
    GatedDecoder() = default;
    /// MLP weights uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)).
    GatedDecoder(const DecoderLayout& layout, std::uint64_t seed);

    const DecoderLayout& layout() const { return layout_; }
    std::array<ParamTensor<T>, decoder_param_count>& params() { return params_; }
    const std::array<ParamTensor<T>, decoder_param_count>& params() const { return params_; }

    /// Batched forward. `v` is [B, input_dim], `sh` is [B, 16]. Fills sigma (B)
    /// and rgb (B*3). The cache is filled when non-null.
    void forward(const RowMatrix<T>& v, const RowMatrix<T>& sh, GateMode mode, T alpha, std::span<T> sigma,
                 std::span<T> rgb, DecoderCache<T>* cache) const;

    /// Batched backward. Adds weight gradients into `grads` and writes dL/dv into dv.
    void backward(const DecoderCache<T>& cache, std::span<const T> dsigma, std::span<const T> drgb, GateMode mode,
                  T alpha, DecoderGrads<T>& grads, RowMatrix<T>& dv) const;

    /// params()[i].grads += grads.g[i]
    void accumulate(const DecoderGrads<T>& grads);

    /// Single-sample convenience wrapper around forward().
    DecoderOutput<T> evaluate(std::span<const T> v, const Vec3<T>& dir, GateMode mode, T alpha) const;

    /// Raw density-net output channel 0 for a single input (before softplus and gate).
    T raw_density(std::span<const T> v) const;

private:
    DecoderLayout layout_;
    std::array<ParamTensor<T>, decoder_param_count> params_;
};

} // namespace hollow
