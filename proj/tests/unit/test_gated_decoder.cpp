#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "hollow/error.hpp"
#include "hollow/gated_decoder.hpp"

using namespace hollow;

TEST(AlphaSchedule, StrictThreshold) {
    EXPECT_EQ(alpha_schedule(0), 1e4);
    EXPECT_EQ(alpha_schedule(500), 1e4);
    EXPECT_EQ(alpha_schedule(999), 1e4);
    EXPECT_EQ(alpha_schedule(1000), 1e5);
    EXPECT_EQ(alpha_schedule(1500), 1e5);
}

TEST(SphericalHarmonics, ConstantBandAndParity) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 50; ++i) {
        const Vec3d d = normalized(Vec3d{nd(rng), nd(rng), nd(rng)});
        const auto a = sh_encode(d);
        const auto b = sh_encode(Vec3d{-d[0], -d[1], -d[2]});
        EXPECT_NEAR(a[0], 0.2820947918, 1e-10);
        // band l occupies [l^2, (l+1)^2)
        for (int l = 0; l < 4; ++l) {
            for (int k = l * l; k < (l + 1) * (l + 1); ++k) {
                EXPECT_NEAR(b[k], (l % 2 ? -1.0 : 1.0) * a[k], 1e-12);
            }
        }
    }
    const auto z = sh_encode(Vec3d{0, 0, 1});
    for (int l = 0; l < 4; ++l) {
        for (int m = -l; m <= l; ++m) {
            if (m != 0) {
                EXPECT_NEAR(z[l * l + l + m], 0.0, 1e-12) << l << "," << m;
            }
        }
    }
    const auto s = sh_encode(Vec3d{0, 0, 5});
    for (int k = 0; k < 16; ++k) EXPECT_NEAR(s[k], z[k], 1e-12);
}

TEST(SoftGate, ClosedFormValues) {
    std::vector<double> zero(32, 0.0);
    EXPECT_EQ(soft_gate<double>(zero, 1e4), 0.0);
    std::vector<double> v(32, 0.0);
    v[3] = 1e-4;
    EXPECT_NEAR(soft_gate<double>(v, 1e4), 0.76159, 1e-5);
    v[3] = 10.0 / 1e4;
    EXPECT_GE(soft_gate<double>(v, 1e4), 0.9999999958);
    v[3] = 0.6e-3;
    v[7] = 0.8e-3;
    EXPECT_GE(soft_gate<double>(v, 1e4), 0.9999999958);
}

TEST(HardGate, Indicator) {
    std::vector<float> v(32, 0.0f);
    EXPECT_EQ(hard_gate<float>(v), 0.0f);
    std::vector<double> w(32, 0.0);
    w[0] = 1e-30;
    EXPECT_EQ(hard_gate<double>(w), 1.0);
}

namespace {

RowMatrix<double> sh_rows(const std::vector<Vec3d>& dirs) {
    RowMatrix<double> sh(static_cast<Eigen::Index>(dirs.size()), DecoderLayout::dir_dim);
    for (std::size_t r = 0; r < dirs.size(); ++r) {
        const auto c = sh_encode(dirs[r]);
        for (int k = 0; k < 16; ++k) sh(static_cast<Eigen::Index>(r), k) = c[k];
    }
    return sh;
}

} // namespace

TEST(GatedDecoder, ZeroFeatureSkipsUnderSoftAndHardGate) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    int ungated_nonzero = 0;
    for (int set = 0; set < 1000; ++set) {
        GatedDecoder<float> dec(DecoderLayout{}, mix_seed(123, set));
        std::vector<float> v(32, 0.0f);
        const Vec3<float> dir = normalized(Vec3<float>{float(nd(rng)), float(nd(rng)), float(nd(rng))});
        EXPECT_EQ(dec.evaluate(v, dir, GateMode::soft, 1e4f).sigma, 0.0f);
        EXPECT_EQ(dec.evaluate(v, dir, GateMode::hard, 1e4f).sigma, 0.0f);
        if (dec.evaluate(v, dir, GateMode::none, 1e4f).sigma != 0.0f) ++ungated_nonzero;
    }
    EXPECT_GT(ungated_nonzero, 0);
}

TEST(GatedDecoder, SoftGateFactorizes) {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> nd;
    GatedDecoder<double> dec(DecoderLayout{}, 5);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(32);
        for (auto& x : v) x = 1e-5 * nd(rng);
        const Vec3d dir = normalized(Vec3d{nd(rng), nd(rng), nd(rng)});
        const double alpha = 1e4;
        const auto gated = dec.evaluate(v, dir, GateMode::soft, alpha);
        const auto plain = dec.evaluate(v, dir, GateMode::none, alpha);
        EXPECT_NEAR(gated.sigma, plain.sigma * soft_gate<double>(v, alpha), 1e-14);
        EXPECT_NEAR(plain.sigma, softplus(dec.raw_density(v)), 1e-14);
        for (int c = 0; c < 3; ++c) EXPECT_EQ(gated.rgb[c], plain.rgb[c]);
    }
}

TEST(GatedDecoder, UpstreamZeroGivesZeroGrads) {
    GatedDecoder<double> dec(DecoderLayout{}, 3);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    RowMatrix<double> v(5, 32);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = nd(rng);
    const auto sh = sh_rows(std::vector<Vec3d>(5, Vec3d{0, 0, 1}));
    std::vector<double> sigma(5), rgb(15);
    DecoderCache<double> cache;
    dec.forward(v, sh, GateMode::soft, 1.0, sigma, rgb, &cache);
    DecoderGrads<double> g;
    g.reset(dec.layout());
    RowMatrix<double> dv;
    dec.backward(cache, std::vector<double>(5, 0.0), std::vector<double>(15, 0.0), GateMode::soft, 1.0, g, dv);
    for (const auto& m : g.g) EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(dv.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GatedDecoder, GateGradientAtZeroFeatureIsZero) {
    GatedDecoder<double> dec(DecoderLayout{}, 4);
    RowMatrix<double> v = RowMatrix<double>::Zero(1, 32);
    const auto sh = sh_rows({Vec3d{1, 0, 0}});
    std::vector<double> sigma(1), rgb(3);
    DecoderCache<double> cache;
    dec.forward(v, sh, GateMode::soft, 1e4, sigma, rgb, &cache);
    DecoderGrads<double> g;
    g.reset(dec.layout());
    RowMatrix<double> dv;
    dec.backward(cache, std::vector<double>{1.0}, std::vector<double>(3, 0.0), GateMode::soft, 1e4, g, dv);
    // gate(0) = 0 kills the density path and the gate term uses the zero subgradient
    EXPECT_EQ(dv.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GatedDecoder, HardGateHasNoGradientThroughGate) {
    GatedDecoder<double> dec(DecoderLayout{}, 4);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    RowMatrix<double> v(1, 32);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = nd(rng);
    const auto sh = sh_rows({Vec3d{0, 1, 0}});
    std::vector<double> sigma(1), rgb(3);
    DecoderCache<double> ch, cn;
    dec.forward(v, sh, GateMode::hard, 1.0, sigma, rgb, &ch);
    dec.forward(v, sh, GateMode::none, 1.0, sigma, rgb, &cn);
    DecoderGrads<double> gh, gn;
    gh.reset(dec.layout());
    gn.reset(dec.layout());
    RowMatrix<double> dvh, dvn;
    dec.backward(ch, std::vector<double>{1.0}, std::vector<double>(3, 0.0), GateMode::hard, 1.0, gh, dvh);
    dec.backward(cn, std::vector<double>{1.0}, std::vector<double>(3, 0.0), GateMode::none, 1.0, gn, dvn);
    EXPECT_LT((dvh - dvn).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GatedDecoder, ParamCount) {
    DecoderLayout l;
    EXPECT_EQ(l.param_count(), 32u * 64 + 64 * 64 + 64 * 16 + 16 + 31 * 64 + 64 * 64 + 64 * 3 + 3);
    GatedDecoder<float> dec(l, 0);
    std::size_t n = 0;
    for (const auto& p : dec.params()) n += p.size();
    EXPECT_EQ(n, l.param_count());
}

TEST(GatedDecoder, SoftDensityGradientMatchesFiniteDifferences) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r64 = hollow::testing::check_gated_density(hollow::testing::Precision::f64, seed);
        EXPECT_LT(r64.max_rel_error, 1e-6) << seed;
        const auto r32 = hollow::testing::check_gated_density(hollow::testing::Precision::f32, seed);
        EXPECT_LT(r32.max_rel_error, 1e-3) << seed;
    }
}

TEST(GateMode, ParseRoundTrip) {
    for (auto m : {GateMode::none, GateMode::hard, GateMode::soft}) EXPECT_EQ(parse_gate_mode(to_string(m)), m);
    EXPECT_THROW(parse_gate_mode("sometimes"), ConfigError);
}
