#include <gtest/gtest.h>

#include <random>

#include "gradcheck.hpp"
#include "hollow/radiance_field.hpp"

using namespace hollow;

namespace {

ModelConfig small_model(bool saliency = true, GateMode gate = GateMode::soft) {
    ModelConfig cfg;
    cfg.hashgrid.log2_table_size = 10;
    cfg.saliency_enabled = saliency;
    cfg.saliency_res = 8;
    cfg.gate.mode = gate;
    return cfg;
}

std::vector<Ray> random_rays(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<Ray> rays(n);
    for (auto& r : rays) {
        const Vec3d dir = normalized(Vec3d{nd(rng), nd(rng), nd(rng)});
        r.origin = -4.0 * dir;
        r.direction = normalized(dir + Vec3d{0.2 * nd(rng), 0.2 * nd(rng), 0.2 * nd(rng)});
        r.near = 2;
        r.far = 6;
    }
    return rays;
}

/// Gradients of sum(pixels * w) for a model whose features are large enough to matter.
std::vector<float> gradient_snapshot(int threads) {
    RadianceField<float> field(small_model(), 4);
    for (auto& v : field.hashgrid().params().values) v *= 1000.0f;
    const auto rays = random_rays(300, 8);
    std::mt19937_64 rng(1);
    auto batch = build_samples<float>(rays, SceneBox{}, 32, true, &rng);
    FieldOptions opts;
    opts.threads = threads;
    FieldCache<float> cache;
    field.forward(batch, opts, &cache);
    std::vector<float> ds(batch.sample_count()), dc(3 * batch.sample_count());
    for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = float(i % 7) * 0.01f - 0.03f;
    for (std::size_t i = 0; i < dc.size(); ++i) dc[i] = float(i % 5) * 0.02f - 0.04f;
    field.zero_grads();
    field.backward(batch, ds, dc, opts, cache);
    std::vector<float> out(batch.sigma.begin(), batch.sigma.end());
    for (auto* p : field.parameters()) out.insert(out.end(), p->grads.begin(), p->grads.end());
    return out;
}

} // namespace

TEST(RadianceField, ParameterOrder) {
    RadianceField<float> a(small_model(true), 0);
    auto ps = a.parameters();
    ASSERT_EQ(ps.size(), 10u);
    EXPECT_EQ(ps.front()->role, ParamRole::hashgrid);
    EXPECT_EQ(ps.back()->role, ParamRole::saliency);
    RadianceField<float> b(small_model(false), 0);
    EXPECT_EQ(b.parameters().size(), 9u);
}

TEST(RadianceField, SameSeedSameInit) {
    RadianceField<float> a(small_model(), 7), b(small_model(), 7), c(small_model(), 8);
    auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->values, pb[i]->values);
    EXPECT_NE(pa[0]->values, pc[0]->values);
}

TEST(RadianceField, ResultsIndependentOfThreadCount) {
    const auto one = gradient_snapshot(1);
    const auto four = gradient_snapshot(4);
    ASSERT_EQ(one.size(), four.size());
    EXPECT_EQ(one, four);
}

TEST(RadianceField, MissingRaysContributeNoSamples) {
    Ray miss;
    miss.origin = {0, 5, 4};
    miss.direction = {0, 0, -1};
    const std::vector<Ray> rays{miss};
    auto batch = build_samples<float>(rays, SceneBox{}, 16, false, nullptr);
    EXPECT_EQ(batch.sample_count(), 0u);
    RadianceField<float> field(small_model(), 0);
    field.forward(batch, {}, nullptr);
    const auto px = composite_batch<float>(batch, {0.2f, 0.3f, 0.4f});
    EXPECT_EQ(px, (std::vector<float>{0.2f, 0.3f, 0.4f}));
}

TEST(RadianceField, SkipThresholdZeroesLowSaliencySamples) {
    RadianceField<float> field(small_model(), 2);
    auto& g = field.saliency().params().values;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = i % 2 ? 3.0f : -30.0f;
    const auto rays = random_rays(20, 4);
    auto batch = build_samples<float>(rays, SceneBox{}, 32, false, nullptr);
    FieldOptions opts;
    opts.skip_threshold = 1e-2;
    field.forward(batch, opts, nullptr);
    int skipped = 0;
    for (std::size_t i = 0; i < batch.sample_count(); ++i) {
        if (batch.saliency[i] < 1e-2f) {
            EXPECT_EQ(batch.sigma[i], 0.0f);
            ++skipped;
        }
    }
    EXPECT_GT(skipped, 0);
}

TEST(RadianceField, ClipPlaneRemovesHalfSpace) {
    RadianceField<float> field(small_model(), 2);
    for (auto& v : field.hashgrid().params().values) v *= 1000.0f;
    const auto rays = random_rays(30, 5);
    const std::array<double, 4> plane{0, 0, 1, 0};
    auto batch = build_samples<float>(rays, SceneBox{}, 32, false, nullptr, plane);
    FieldOptions opts;
    opts.clip_plane = plane;
    field.forward(batch, opts, nullptr);
    const SceneBox box;
    int removed = 0;
    for (std::size_t i = 0; i < batch.sample_count(); ++i) {
        const auto& u = batch.positions[i];
        const auto w = box.from_unit({u[0], u[1], u[2]});
        if (w[2] > 1e-4) {
            EXPECT_EQ(batch.sigma[i], 0.0f);
            ++removed;
        }
    }
    EXPECT_GT(removed, 0);
}

TEST(RadianceField, CastPreservesValues) {
    RadianceField<float> f(small_model(), 3);
    const auto d = f.cast<double>();
    const auto back = d.cast<float>();
    auto pf = f.parameters();
    auto pb = back.parameters();
    for (std::size_t i = 0; i < pf.size(); ++i) EXPECT_EQ(pf[i]->values, pb[i]->values);
}

TEST(RadianceField, QueryMatchesBatchedForward) {
    RadianceField<double> field(small_model(), 6);
    for (auto& v : field.hashgrid().params().values) v *= 1000.0;
    const auto rays = random_rays(4, 10);
    auto batch = build_samples<double>(rays, SceneBox{}, 8, false, nullptr);
    FieldOptions opts;
    field.forward(batch, opts, nullptr);
    for (std::size_t i = 0; i < batch.sample_count(); ++i) {
        double p = 0;
        const auto out = field.query(batch.positions[i], batch.directions[i], opts.alpha, &p);
        EXPECT_NEAR(out.sigma, batch.sigma[i], 1e-12 * (1 + out.sigma));
        EXPECT_NEAR(p, batch.saliency[i], 1e-14);
    }
}

TEST(RadianceField, EndToEndGradientMatchesFiniteDifferences) {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 9u, 10u}) {
        const auto r64 = hollow::testing::check_end_to_end(hollow::testing::Precision::f64, seed);
        EXPECT_LT(r64.max_rel_error, 1e-6) << seed << " coords " << r64.coords;
        const auto r32 = hollow::testing::check_end_to_end(hollow::testing::Precision::f32, seed);
        EXPECT_LT(r32.max_rel_error, 1e-3) << seed << " coords " << r32.coords;
    }
}
