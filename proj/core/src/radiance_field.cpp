#include "hollow/radiance_field.hpp"

#include <algorithm>
#include <cmath>

#include "hollow/error.hpp"
#include "hollow/parallel.hpp"

namespace hollow {

void ModelConfig::validate() const {
    hashgrid.validate();
    if (saliency_enabled && saliency_res < 2) {
        throw ConfigError("saliency resolution must be >= 2");
    }
    if (hidden < 1 || geo_dim < 0) {
        throw ConfigError("decoder widths must be positive");
    }
}

ParamBreakdown param_count(const HashGridConfig& hashgrid, const DecoderLayout& mlp,
                           std::optional<int> saliency_res) {
    ParamBreakdown out;
    out.hashgrid = hashgrid_param_count(hashgrid);
    out.mlp = mlp.param_count();
    if (saliency_res) {
        const auto t = static_cast<std::size_t>(*saliency_res);
        out.saliency = t * t * t;
    }
    return out;
}

ParamBreakdown param_count(const ModelConfig& cfg) {
    return param_count(cfg.hashgrid, cfg.decoder_layout(),
                       cfg.saliency_enabled ? std::optional<int>(cfg.saliency_res) : std::nullopt);
}

template <typename T>
SampleBatch<T> build_samples(std::span<const Ray> rays, const SceneBox& box, int samples_per_ray, bool jitter,
                             std::mt19937_64* rng, const std::optional<std::array<double, 4>>& clip_plane) {
    SampleBatch<T> batch;
    batch.ray_offsets.reserve(rays.size() + 1);
    const std::size_t expect = rays.size() * static_cast<std::size_t>(samples_per_ray);
    batch.positions.reserve(expect);
    batch.directions.reserve(expect);
    batch.t.reserve(expect);
    batch.delta.reserve(expect);
    batch.removed.reserve(expect);
    for (const Ray& ray : rays) {
        if (const auto clipped = box.clip(ray)) {
            const RaySamples s = stratified_samples(*clipped, samples_per_ray, jitter, rng);
            const Vec3<T> dir{static_cast<T>(ray.direction[0]), static_cast<T>(ray.direction[1]),
                              static_cast<T>(ray.direction[2])};
            for (std::size_t k = 0; k < s.t.size(); ++k) {
                const Vec3d world = ray.origin + s.t[k] * ray.direction;
                const Vec3d u = box.to_unit(world);
                batch.positions.push_back({static_cast<T>(u[0]), static_cast<T>(u[1]), static_cast<T>(u[2])});
                batch.directions.push_back(dir);
                batch.t.push_back(static_cast<T>(s.t[k]));
                batch.delta.push_back(static_cast<T>(s.delta[k]));
                bool removed = false;
                if (clip_plane) {
                    const auto& pl = *clip_plane;
                    removed = pl[0] * world[0] + pl[1] * world[1] + pl[2] * world[2] + pl[3] > 0.0;
                }
                batch.removed.push_back(removed ? 1 : 0);
            }
        }
        batch.ray_offsets.push_back(batch.positions.size());
    }
    return batch;
}

template <typename T>
RadianceField<T>::RadianceField(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      hashgrid_(cfg.hashgrid, mix_seed(seed, 100)),
      decoder_(cfg.decoder_layout(), mix_seed(seed, 200)) {
    cfg_.validate();
    if (cfg.saliency_enabled) {
        saliency_ = SaliencyGrid<T>(cfg.saliency_res);
    }
}

template <typename T>
std::vector<ParamTensor<T>*> RadianceField<T>::parameters() {
    std::vector<ParamTensor<T>*> out;
    out.push_back(&hashgrid_.params());
    for (auto& p : decoder_.params()) out.push_back(&p);
    if (cfg_.saliency_enabled) out.push_back(&saliency_.params());
    return out;
}

template <typename T>
std::vector<const ParamTensor<T>*> RadianceField<T>::parameters() const {
    std::vector<const ParamTensor<T>*> out;
    out.push_back(&hashgrid_.params());
    for (const auto& p : decoder_.params()) out.push_back(&p);
    if (cfg_.saliency_enabled) out.push_back(&saliency_.params());
    return out;
}

template <typename T>
void RadianceField<T>::zero_grads() {
    for (auto* p : parameters()) hollow::zero_grads(*p);
}

template <typename T>
void RadianceField<T>::forward(SampleBatch<T>& batch, const FieldOptions& opts, FieldCache<T>* cache) const {
    const std::size_t n = batch.sample_count();
    batch.sigma.assign(n, T(0));
    batch.rgb.assign(n * 3, T(0));
    batch.saliency.assign(n, T(1));
    const std::size_t n_chunks = (n + kFieldChunk - 1) / kFieldChunk;
    std::vector<ChunkCache<T>> local;
    std::vector<ChunkCache<T>>& chunks = cache ? cache->chunks : local;
    chunks.clear();
    chunks.resize(n_chunks);
    const int in_dim = hashgrid_.output_dim();
    const T alpha = static_cast<T>(opts.alpha);
    const GateMode mode = cfg_.gate.mode;

    parallel_for(n_chunks, opts.threads, [&](std::size_t ci) {
        ChunkCache<T>& cc = chunks[ci];
        const std::size_t begin = ci * kFieldChunk;
        const std::size_t end = std::min(n, begin + kFieldChunk);
        cc.rows.clear();
        cc.p.clear();
        std::vector<T> f(static_cast<std::size_t>(in_dim));
        RowMatrix<T> feats(static_cast<Eigen::Index>(end - begin), in_dim);
        for (std::size_t s = begin; s < end; ++s) {
            if (batch.removed[s]) {
                continue;
            }
            T p = T(1);
            if (cfg_.saliency_enabled) {
                p = saliency_.lookup(batch.positions[s]).p;
                batch.saliency[s] = p;
                if (opts.skip_threshold > 0.0 && p < static_cast<T>(opts.skip_threshold)) {
                    continue;
                }
            }
            hashgrid_.encode(batch.positions[s], f);
            const auto row = static_cast<Eigen::Index>(cc.rows.size());
            for (int k = 0; k < in_dim; ++k) feats(row, k) = f[static_cast<std::size_t>(k)];
            cc.rows.push_back(static_cast<std::uint32_t>(s));
            cc.p.push_back(p);
        }
        const auto rows = static_cast<Eigen::Index>(cc.rows.size());
        cc.features = feats.topRows(rows);
        if (rows == 0) {
            return;
        }
        RowMatrix<T> v = cc.features;
        if (cfg_.saliency_enabled) {
            for (Eigen::Index r = 0; r < rows; ++r) v.row(r) *= cc.p[static_cast<std::size_t>(r)];
        }
        RowMatrix<T> sh(rows, DecoderLayout::dir_dim);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto coeffs = sh_encode(batch.directions[cc.rows[static_cast<std::size_t>(r)]]);
            for (int k = 0; k < DecoderLayout::dir_dim; ++k) sh(r, k) = coeffs[static_cast<std::size_t>(k)];
        }
        std::vector<T> sigma(static_cast<std::size_t>(rows));
        std::vector<T> rgb(static_cast<std::size_t>(rows) * 3);
        decoder_.forward(v, sh, mode, alpha, sigma, rgb, cache ? &cc.decoder : nullptr);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const std::size_t s = cc.rows[static_cast<std::size_t>(r)];
            batch.sigma[s] = sigma[static_cast<std::size_t>(r)];
            for (int k = 0; k < 3; ++k) {
                batch.rgb[s * 3 + static_cast<std::size_t>(k)] = rgb[static_cast<std::size_t>(r) * 3 + static_cast<std::size_t>(k)];
            }
        }
        if (!cache) {
            cc = ChunkCache<T>{};
        }
    });
}

template <typename T>
void RadianceField<T>::backward(const SampleBatch<T>& batch, std::span<const T> dsigma, std::span<const T> drgb,
                                const FieldOptions& opts, const FieldCache<T>& cache) {
    const std::size_t n_chunks = cache.chunks.size();
    const T alpha = static_cast<T>(opts.alpha);
    const GateMode mode = cfg_.gate.mode;
    std::vector<DecoderGrads<T>> chunk_grads(n_chunks);
    std::vector<RowMatrix<T>> chunk_dv(n_chunks);

    parallel_for(n_chunks, opts.threads, [&](std::size_t ci) {
        const ChunkCache<T>& cc = cache.chunks[ci];
        chunk_grads[ci].reset(decoder_.layout());
        if (cc.rows.empty()) {
            return;
        }
        std::vector<T> ds(cc.rows.size());
        std::vector<T> dc(cc.rows.size() * 3);
        for (std::size_t r = 0; r < cc.rows.size(); ++r) {
            const std::size_t s = cc.rows[r];
            ds[r] = dsigma[s];
            for (std::size_t k = 0; k < 3; ++k) dc[r * 3 + k] = drgb[s * 3 + k];
        }
        decoder_.backward(cc.decoder, ds, dc, mode, alpha, chunk_grads[ci], chunk_dv[ci]);
    });

    const int in_dim = hashgrid_.output_dim();
    std::vector<T> df(static_cast<std::size_t>(in_dim));
    std::vector<T> f(static_cast<std::size_t>(in_dim));
    std::vector<T> dv(static_cast<std::size_t>(in_dim));
    for (std::size_t ci = 0; ci < n_chunks; ++ci) {
        const ChunkCache<T>& cc = cache.chunks[ci];
        if (cc.rows.empty()) {
            continue;
        }
        decoder_.accumulate(chunk_grads[ci]);
        for (std::size_t r = 0; r < cc.rows.size(); ++r) {
            const std::size_t s = cc.rows[r];
            const auto row = static_cast<Eigen::Index>(r);
            for (int k = 0; k < in_dim; ++k) {
                dv[static_cast<std::size_t>(k)] = chunk_dv[ci](row, k);
                f[static_cast<std::size_t>(k)] = cc.features(row, k);
            }
            if (cfg_.saliency_enabled) {
                std::fill(df.begin(), df.end(), T(0));
                const T p = cc.p[r];
                const T dp = apply_saliency_backward<T>(p, f, dv, df);
                saliency_.backward(saliency_.lookup(batch.positions[s]), dp);
                hashgrid_.encode_backward(batch.positions[s], df);
            } else {
                hashgrid_.encode_backward(batch.positions[s], dv);
            }
        }
    }
}

template <typename T>
DecoderOutput<T> RadianceField<T>::query(const Vec3<T>& unit_pos, const Vec3<T>& dir, T alpha, T* saliency_out) const {
    std::vector<T> f(static_cast<std::size_t>(hashgrid_.output_dim()));
    hashgrid_.encode(unit_pos, f);
    T p = T(1);
    if (cfg_.saliency_enabled) {
        p = saliency_.weight(unit_pos);
        apply_saliency<T>(p, f, f);
    }
    if (saliency_out) *saliency_out = p;
    return decoder_.evaluate(f, dir, cfg_.gate.mode, alpha);
}

template <typename T>
std::vector<T> composite_batch(const SampleBatch<T>& batch, const std::array<T, 3>& background) {
    const std::size_t rays = batch.ray_count();
    std::vector<T> out(rays * 3);
    for (std::size_t r = 0; r < rays; ++r) {
        const std::size_t b = batch.ray_offsets[r];
        const std::size_t e = batch.ray_offsets[r + 1];
        const auto res = composite<T>(std::span(batch.sigma).subspan(b, e - b),
                                      std::span(batch.rgb).subspan(b * 3, (e - b) * 3),
                                      std::span(batch.delta).subspan(b, e - b), background);
        for (std::size_t k = 0; k < 3; ++k) out[r * 3 + k] = res.rgb[k];
    }
    return out;
}

std::vector<float> render_rays(const RadianceField<float>& field, std::span<const Ray> rays, const SceneBox& box,
                               const RenderOptions& opts) {
    std::vector<float> out;
    out.reserve(rays.size() * 3);
    const std::array<float, 3> bg{static_cast<float>(opts.background[0]), static_cast<float>(opts.background[1]),
                                  static_cast<float>(opts.background[2])};
    for (std::size_t begin = 0; begin < rays.size(); begin += opts.rays_per_block) {
        const std::size_t count = std::min(opts.rays_per_block, rays.size() - begin);
        auto batch = build_samples<float>(rays.subspan(begin, count), box, opts.samples_per_ray, false, nullptr,
                                          opts.field.clip_plane);
        field.forward(batch, opts.field, nullptr);
        const auto px = composite_batch<float>(batch, bg);
        out.insert(out.end(), px.begin(), px.end());
    }
    return out;
}

std::vector<float> render_view(const RadianceField<float>& field, const Camera& cam, const SceneBox& box,
                               const RenderOptions& opts) {
    std::vector<Ray> rays;
    rays.reserve(static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height));
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            rays.push_back(ray_for_pixel(cam, x, y, opts.near, opts.far));
        }
    }
    return render_rays(field, rays, box, opts);
}

template SampleBatch<float> build_samples<float>(std::span<const Ray>, const SceneBox&, int, bool, std::mt19937_64*,
                                                 const std::optional<std::array<double, 4>>&);
template SampleBatch<double> build_samples<double>(std::span<const Ray>, const SceneBox&, int, bool,
                                                   std::mt19937_64*, const std::optional<std::array<double, 4>>&);
template std::vector<float> composite_batch<float>(const SampleBatch<float>&, const std::array<float, 3>&);
template std::vector<double> composite_batch<double>(const SampleBatch<double>&, const std::array<double, 3>&);
template class RadianceField<float>;
template class RadianceField<double>;

} // namespace hollow
