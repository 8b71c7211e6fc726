#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hollow/admm_trainer.hpp"
#include "hollow/config.hpp"
#include "hollow/gated_decoder.hpp"
#include "hollow/hash_encoding.hpp"
#include "hollow/synthetic.hpp"
#include "hollow/volume_renderer.hpp"

using namespace hollow;

namespace {

std::vector<Vec3<float>> random_points(std::size_t n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<Vec3<float>> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
    return pts;
}

void BM_Encode(benchmark::State& state) {
    HashGridConfig cfg;
    cfg.log2_table_size = static_cast<int>(state.range(0));
    const HashGrid<float> grid(cfg, 0);
    const auto pts = random_points(4096);
    std::vector<float> out(static_cast<std::size_t>(grid.output_dim()));
    for (auto _ : state) {
        for (const auto& p : pts) grid.encode(p, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_Encode)->Arg(12)->Arg(19);

void BM_EncodeBackward(benchmark::State& state) {
    HashGrid<float> grid(HashGridConfig{}, 0);
    const auto pts = random_points(4096);
    const std::vector<float> up(static_cast<std::size_t>(grid.output_dim()), 0.1f);
    for (auto _ : state) {
        for (const auto& p : pts) grid.encode_backward(p, up);
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_EncodeBackward);

void BM_DecoderForward(benchmark::State& state) {
    const DecoderLayout layout;
    const GatedDecoder<float> dec(layout, 3);
    const auto b = static_cast<Eigen::Index>(state.range(0));
    RowMatrix<float> v = RowMatrix<float>::Random(b, layout.input_dim);
    RowMatrix<float> sh(b, 16);
    for (Eigen::Index i = 0; i < b; ++i) {
        const auto y = sh_encode<float>({0.0f, 0.6f, 0.8f});
        for (int k = 0; k < 16; ++k) sh(i, k) = y[static_cast<std::size_t>(k)];
    }
    std::vector<float> sigma(static_cast<std::size_t>(b)), rgb(3 * static_cast<std::size_t>(b));
    for (auto _ : state) {
        dec.forward(v, sh, GateMode::soft, 1e4f, sigma, rgb, nullptr);
        benchmark::DoNotOptimize(sigma.data());
    }
    state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_DecoderForward)->Arg(1024)->Arg(8192);

void BM_Composite(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    std::exponential_distribution<float> ex(1.0f);
    std::vector<float> sigma(n), rgb(3 * n, 0.5f), delta(n, 4.0f / static_cast<float>(n));
    for (auto& s : sigma) s = ex(rng);
    for (auto _ : state) {
        const auto px = composite<float>(sigma, rgb, delta, {1.0f, 1.0f, 1.0f});
        benchmark::DoNotOptimize(px);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Composite)->Arg(64)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
    CameraRig rig;
    rig.views = 8;
    rig.width = 32;
    rig.height = 32;
    const Dataset data = gen_synthetic(SyntheticScene{}, rig, "train", {1.0, 1.0, 1.0}, 128);
    Config cfg = desk_preset();
    cfg.train.threads = 1;
    Trainer trainer(cfg, data);
    for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
    state.SetItemsProcessed(state.iterations() * cfg.train.rays_per_step);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
