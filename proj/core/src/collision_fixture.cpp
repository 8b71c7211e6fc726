#include "hollow/collision_fixture.hpp"

#include <cmath>
#include <map>

#include "hollow/error.hpp"
#include "hollow/saliency_field.hpp"

namespace hollow {

CollisionFixture make_collision_fixture() {
    CollisionFixture fx;
    fx.grid.levels = 1;
    fx.grid.feature_dim = 2;
    fx.grid.log2_table_size = 6;
    fx.grid.base_res = 9;
    fx.grid.max_res = 9;
    const int n = fx.grid.base_res;
    const int step = n / (fx.saliency_res - 1);
    const auto table = static_cast<std::uint32_t>(fx.grid.table_size());
    std::map<std::uint32_t, std::array<std::uint32_t, 3>> seen;
    for (int z = 0; z <= n; z += step) {
        for (int y = 0; y <= n; y += step) {
            for (int x = 0; x <= n; x += step) {
                const std::array<std::uint32_t, 3> c{static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                                                     static_cast<std::uint32_t>(z)};
                const std::uint32_t h = hash_index(c, table);
                if (auto it = seen.find(h); it != seen.end()) {
                    fx.corner1 = it->second;
                    fx.corner2 = c;
                    fx.bucket = h;
                    for (int d = 0; d < 3; ++d) {
                        fx.x1[d] = static_cast<float>(fx.corner1[d]) / static_cast<float>(n);
                        fx.x2[d] = static_cast<float>(fx.corner2[d]) / static_cast<float>(n);
                    }
                    return fx;
                }
                seen.emplace(h, c);
            }
        }
    }
    throw NumericalError("collision fixture: no colliding saliency-aligned corners");
}

CollisionResult train_collision_fixture(const CollisionFixture& fx, const CollisionTrainOptions& opts) {
    HashGrid<float> grid(fx.grid, mix_seed(opts.seed, 100));
    SaliencyGrid<float> sal(fx.saliency_res);
    PrunerState pruner = PrunerState::from_config(opts.pruner);
    if (!opts.saliency) pruner.mode = PrunerMode::none;
    const AdamConfig ac{opts.lr, 0.9, 0.99, 1e-15};
    AdamState<float> grid_adam(grid.params().size(), ac);
    AdamState<float> sal_adam(sal.params().size(), ac);

    const std::array<Vec3<float>, 2> xs{fx.x1, fx.x2};
    const std::array<std::array<float, 2>, 2> targets{std::array<float, 2>{0.0f, 0.0f}, fx.target2};
    const int dim = grid.output_dim();
    std::vector<float> f(static_cast<std::size_t>(dim));
    std::vector<float> v(static_cast<std::size_t>(dim));
    std::vector<float> dv(static_cast<std::size_t>(dim));
    std::vector<float> df(static_cast<std::size_t>(dim));
    const float norm = 1.0f / static_cast<float>(xs.size() * static_cast<std::size_t>(dim));

    for (std::int64_t step = 0; step < opts.steps; ++step) {
        zero_grads(grid.params());
        zero_grads(sal.params());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            grid.encode(xs[i], f);
            float p = 1.0f;
            SaliencyLookup<float> q;
            if (opts.saliency) {
                q = sal.lookup(xs[i]);
                p = q.p;
            }
            apply_saliency<float>(p, f, v);
            for (int k = 0; k < dim; ++k) {
                dv[static_cast<std::size_t>(k)] =
                    2.0f * (v[static_cast<std::size_t>(k)] - targets[i][static_cast<std::size_t>(k)]) * norm;
            }
            std::fill(df.begin(), df.end(), 0.0f);
            const float dp = apply_saliency_backward<float>(p, f, dv, df);
            if (opts.saliency) sal.backward(q, dp);
            grid.encode_backward(xs[i], df);
        }
        const double s = static_cast<double>(sal.sparsity());
        if (opts.saliency && pruner.mode != PrunerMode::none) {
            sal.sparsity_backward(static_cast<float>(sparsity_penalty_grad(s, pruner)));
        }
        adam_step(grid.params(), grid_adam);
        if (opts.saliency) adam_step(sal.params(), sal_adam);
        if (pruner.mode == PrunerMode::admm) dual_update(pruner, s);
    }

    CollisionResult res;
    grid.encode(fx.x2, f);
    res.feature = {f[0], f[1]};
    if (opts.saliency) {
        res.p1 = sal.weight(fx.x1);
        res.p2 = sal.weight(fx.x2);
        res.sparsity = sal.sparsity();
    }
    const double e0 = res.p2 * res.feature[0] - fx.target2[0];
    const double e1 = res.p2 * res.feature[1] - fx.target2[1];
    res.rel_error = std::sqrt(e0 * e0 + e1 * e1) /
                    std::sqrt(static_cast<double>(fx.target2[0]) * fx.target2[0] +
                              static_cast<double>(fx.target2[1]) * fx.target2[1]);
    res.gamma = pruner.gamma;
    return res;
}

} // namespace hollow
