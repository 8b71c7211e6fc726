#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "hollow/error.hpp"
#include "hollow/hash_encoding.hpp"
#include "hollow/saliency_field.hpp"

using namespace hollow;

namespace {

constexpr double kSigmoidOne = 0.7310585786300049;

} // namespace

TEST(SaliencyGrid, FreshGridIsSigmoidOne) {
    SaliencyGrid<double> g(8);
    EXPECT_EQ(g.node_count(), 512u);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 100; ++i) EXPECT_NEAR(g.weight({u(rng), u(rng), u(rng)}), kSigmoidOne, 1e-12);
    EXPECT_NEAR(g.sparsity(), 0.73106, 1e-5);
}

TEST(SaliencyGrid, ZeroGridIsHalf) {
    SaliencyGrid<double> g(5);
    std::fill(g.params().values.begin(), g.params().values.end(), 0.0);
    EXPECT_DOUBLE_EQ(g.weight({0.3, 0.2, 0.9}), 0.5);
    EXPECT_DOUBLE_EQ(g.sparsity(), 0.5);
}

TEST(SaliencyGrid, NodeExactness) {
    SaliencyGrid<double> g(4);
    g.params().values[g.node_index(1, 2, 3)] = -20.0;
    const double p = g.weight({1.0 / 3.0, 2.0 / 3.0, 1.0});
    EXPECT_NEAR(p, 2.06e-9, 0.01e-9);
    EXPECT_DOUBLE_EQ(p, 1.0 / (1.0 + std::exp(20.0)));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0, 3);
    for (auto& v : g.params().values) v = nd(rng);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                EXPECT_NEAR(g.weight({x / 3.0, y / 3.0, z / 3.0}), sigmoid(g.params().values[g.node_index(x, y, z)]),
                            1e-14);
}

TEST(SaliencyGrid, HalfSaturatedGridHasHalfSparsity) {
    SaliencyGrid<double> g(4);
    for (std::size_t i = 0; i < g.node_count(); ++i) g.params().values[i] = i % 2 ? 20.0 : -20.0;
    EXPECT_NEAR(g.sparsity(), 0.5, 1e-8);
}

TEST(SaliencyGrid, WeightsStayInOpenUnitInterval) {
    SaliencyGrid<double> g(6);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(0, 5);
    std::uniform_real_distribution<double> u(-0.1, 1.1);
    for (auto& v : g.params().values) v = nd(rng);
    for (int i = 0; i < 1000; ++i) {
        const double p = g.weight({u(rng), u(rng), u(rng)});
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(SaliencyGrid, MonotoneInEachNode) {
    SaliencyGrid<double> g(4);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0, 2);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& v : g.params().values) v = nd(rng);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3<double> x{u(rng), u(rng), u(rng)};
        const std::size_t node = rng() % g.node_count();
        const double before = g.weight(x);
        g.params().values[node] += std::abs(nd(rng));
        EXPECT_GE(g.weight(x), before);
    }
}

TEST(SaliencyGrid, SparsityGradient) {
    SaliencyGrid<double> g(3);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd(0, 2);
    for (auto& v : g.params().values) v = nd(rng);
    g.sparsity_backward(1.0);
    const double n = double(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const double p = sigmoid(g.params().values[i]);
        EXPECT_NEAR(g.params().grads[i], p * (1 - p) / n, 1e-15);
        EXPECT_GE(g.params().grads[i], 0.0);
    }
}

TEST(SaliencyGrid, SaturatedNodeHasVanishingGradient) {
    SaliencyGrid<double> g(2);
    std::fill(g.params().values.begin(), g.params().values.end(), 40.0);
    const auto q = g.lookup({0.5, 0.5, 0.5});
    g.backward(q, 1.0);
    for (double d : g.params().grads) EXPECT_LT(std::abs(d), 1e-16);
}

TEST(ApplySaliency, ScalesFeatures) {
    std::vector<double> v(2);
    apply_saliency<double>(0.5, std::vector<double>{0.2, -0.4}, v);
    EXPECT_DOUBLE_EQ(v[0], 0.1);
    EXPECT_DOUBLE_EQ(v[1], -0.2);

    apply_saliency<double>(0.9, std::vector<double>{0.0, 0.0}, v);
    EXPECT_EQ(v, (std::vector<double>{0, 0}));

    apply_saliency<double>(1.0 - 1e-12, std::vector<double>{0.7, 0.1}, v);
    EXPECT_NEAR(v[0], 0.7, 1e-11);
}

TEST(ApplySaliency, ZeroFeatureSendsNoGradientToSaliency) {
    std::vector<double> df(3, 0.0);
    const double dp = apply_saliency_backward<double>(0.3, std::vector<double>{0, 0, 0}, std::vector<double>{1, -2, 3}, df);
    EXPECT_EQ(dp, 0.0);
    EXPECT_DOUBLE_EQ(df[1], -0.6);
}

TEST(ApplySaliency, SharedBucketGradientScalesWithSaliency) {
    // Two inputs reading the same feature entry: the scattered gradient ratio is p1 / p2.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int i = 0; i < 100; ++i) {
        const double p1 = u(rng), p2 = u(rng);
        const std::vector<double> f{0.3, -0.1}, dv{0.7, 0.2};
        std::vector<double> d1(2, 0.0), d2(2, 0.0);
        apply_saliency_backward<double>(p1, f, dv, d1);
        apply_saliency_backward<double>(p2, f, dv, d2);
        EXPECT_NEAR(d1[0] / d2[0], p1 / p2, 1e-12);
        EXPECT_NEAR(d1[1] / d2[1], p1 / p2, 1e-12);
    }
}

TEST(SaliencyGrid, SliceLayoutAndBounds) {
    SaliencyGrid<double> g(4);
    g.params().values[g.node_index(2, 1, 3)] = 0.0;
    const auto s = g.slice(2, 3);
    ASSERT_EQ(s.size(), 16u);
    EXPECT_DOUBLE_EQ(s[1 * 4 + 2], 0.5);
    EXPECT_NEAR(s[0], kSigmoidOne, 1e-15);
    const auto sx = g.slice(0, 2);
    EXPECT_DOUBLE_EQ(sx[3 * 4 + 1], 0.5);

    EXPECT_THROW(g.slice(3, 0), UsageError);
    EXPECT_THROW(g.slice(-1, 0), UsageError);
    EXPECT_THROW(g.slice(0, 4), UsageError);
    EXPECT_THROW(g.slice(0, -1), UsageError);
}

TEST(SaliencyGrid, FreshSliceIsUniformGray) {
    SaliencyGrid<float> g(16);
    for (float v : g.slice(1, 8)) EXPECT_NEAR(v, 0.731f, 1e-3f);
}

TEST(SaliencyGrid, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r64 = hollow::testing::check_saliency_apply(hollow::testing::Precision::f64, seed);
        EXPECT_LT(r64.max_rel_error, 1e-6) << seed;
        const auto r32 = hollow::testing::check_saliency_apply(hollow::testing::Precision::f32, seed);
        EXPECT_LT(r32.max_rel_error, 1e-3) << seed;
    }
}
