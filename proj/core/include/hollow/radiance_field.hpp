#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hollow/gated_decoder.hpp"
#include "hollow/hash_encoding.hpp"
#include "hollow/saliency_field.hpp"
#include "hollow/volume_renderer.hpp"

namespace hollow {

struct ModelConfig {
    HashGridConfig hashgrid;
    bool saliency_enabled = true;
    int saliency_res = 64;
    int hidden = 64;
    int geo_dim = 15;
    GateConfig gate;

    DecoderLayout decoder_layout() const { return {hashgrid.output_dim(), hidden, geo_dim}; }
    void validate() const;
};

struct ParamBreakdown {
    std::size_t hashgrid = 0;
    std::size_t mlp = 0;
    std::size_t saliency = 0;
    std::size_t total() const { return hashgrid + mlp + saliency; }
};

/// Trainable parameter count: hashgrid entries x F, MLP weights, plus T^3 when saliency is on.
ParamBreakdown param_count(const HashGridConfig& hashgrid, const DecoderLayout& mlp,
                           std::optional<int> saliency_res);
ParamBreakdown param_count(const ModelConfig& cfg);

/// Per-call evaluation switches.
struct FieldOptions {
    double alpha = 1e4;
    /// Samples whose saliency p falls below this get sigma = 0 without running the
    /// decoder. 0 disables skipping.
    double skip_threshold = 0.0;
    /// World-space plane (a, b, c, d): samples with a*x + b*y + c*z + d > 0 are removed.
    std::optional<std::array<double, 4>> clip_plane;
    int threads = 1;
};

/// Flattened samples for a set of rays; samples of ray r occupy
/// [ray_offsets[r], ray_offsets[r+1]).
template <typename T>
struct SampleBatch {
    std::vector<std::size_t> ray_offsets{0};
    std::vector<Vec3<T>> positions;  // unit cube
    std::vector<Vec3<T>> directions; // unit, world space
    std::vector<T> t;
    std::vector<T> delta;
    std::vector<std::uint8_t> removed; // clipped by FieldOptions::clip_plane
    std::vector<T> sigma;
    std::vector<T> rgb;      // 3 per sample
    std::vector<T> saliency; // p per sample (1 when saliency is disabled)

    std::size_t ray_count() const { return ray_offsets.size() - 1; }
    std::size_t sample_count() const { return positions.size(); }
};

/// Stratified samples for every ray after clipping to the scene box. Rays that
/// miss the box contribute zero samples (pure background).
template <typename T>
SampleBatch<T> build_samples(std::span<const Ray> rays, const SceneBox& box, int samples_per_ray, bool jitter,
                             std::mt19937_64* rng, const std::optional<std::array<double, 4>>& clip_plane = {});

constexpr std::size_t kFieldChunk = 1024;

template <typename T>
struct ChunkCache {
    std::vector<std::uint32_t> rows; // sample indices that ran through the decoder
    RowMatrix<T> features;           // raw hashgrid features f per row
    std::vector<T> p;
    DecoderCache<T> decoder;
};

template <typename T>
struct FieldCache {
    std::vector<ChunkCache<T>> chunks;
};

/// Hash encoding -> saliency weighting -> gated decoder, with hand-written adjoints.
template <typename T>
class RadianceField {
public:
    RadianceField() = default;
    RadianceField(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    HashGrid<T>& hashgrid() { return hashgrid_; }
    const HashGrid<T>& hashgrid() const { return hashgrid_; }
    bool has_saliency() const { return cfg_.saliency_enabled; }
    SaliencyGrid<T>& saliency() { return saliency_; }
    const SaliencyGrid<T>& saliency() const { return saliency_; }
    GatedDecoder<T>& decoder() { return decoder_; }
    const GatedDecoder<T>& decoder() const { return decoder_; }

    /// Fixed order: hashgrid, 8 decoder tensors, saliency (if enabled).
    std::vector<ParamTensor<T>*> parameters();
    std::vector<const ParamTensor<T>*> parameters() const;
    void zero_grads();

    /// Fills batch.sigma/rgb/saliency. Fills `cache` for backward when non-null.
    void forward(SampleBatch<T>& batch, const FieldOptions& opts, FieldCache<T>* cache) const;

    /// Accumulates parameter gradients for upstream dL/dsigma and dL/drgb.
    /// Per-chunk results are reduced in chunk order, so the result does not
    /// depend on opts.threads.
    void backward(const SampleBatch<T>& batch, std::span<const T> dsigma, std::span<const T> drgb,
                  const FieldOptions& opts, const FieldCache<T>& cache);

    /// Same parameters in another precision.
    template <typename U>
    RadianceField<U> cast() const;

    /// Point query for tests and tools (no gradient bookkeeping).
    DecoderOutput<T> query(const Vec3<T>& unit_pos, const Vec3<T>& dir, T alpha, T* saliency_out = nullptr) const;

    template <typename U>
    friend class RadianceField;

private:
    ModelConfig cfg_;
    HashGrid<T> hashgrid_;
    SaliencyGrid<T> saliency_;
    GatedDecoder<T> decoder_;
};

template <typename T>
template <typename U>
RadianceField<U> RadianceField<T>::cast() const {
    RadianceField<U> out(cfg_, 0);
    auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i]->values.assign(src[i]->values.begin(), src[i]->values.end());
    }
    return out;
}

/// Composites one pixel per ray from an evaluated batch.
template <typename T>
std::vector<T> composite_batch(const SampleBatch<T>& batch, const std::array<T, 3>& background);

struct RenderOptions {
    int samples_per_ray = 128;
    double near = 2.0;
    double far = 6.0;
    std::array<double, 3> background{1.0, 1.0, 1.0};
    FieldOptions field;
    std::size_t rays_per_block = 4096;
};

/// Deterministic (unjittered) render of a set of rays; 3 floats per ray.
std::vector<float> render_rays(const RadianceField<float>& field, std::span<const Ray> rays, const SceneBox& box,
                               const RenderOptions& opts);

/// Full-frame render, row-major RGB.
std::vector<float> render_view(const RadianceField<float>& field, const Camera& cam, const SceneBox& box,
                               const RenderOptions& opts);

} // namespace hollow
