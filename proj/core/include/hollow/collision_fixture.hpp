#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hollow/admm_trainer.hpp"
#include "hollow/hash_encoding.hpp"

namespace hollow {

/// Two unit-cube points whose level corners share one hash bucket. Both sit exactly on
/// saliency nodes, so each reads exactly one table entry and one saliency value.
struct CollisionFixture {
    HashGridConfig grid;
    int saliency_res = 4;
    Vec3<float> x1{};
    Vec3<float> x2{};
    std::array<std::uint32_t, 3> corner1{};
    std::array<std::uint32_t, 3> corner2{};
    std::uint32_t bucket = 0;
    /// Feature x2 should produce; x1 should produce zero (invisible blob).
    std::array<float, 2> target2{0.8f, -0.6f};
};

/// Single-level grid (resolution 9, table 2^6, F=2) with a 4^3 saliency grid; returns the
/// first colliding pair of saliency-aligned corners in enumeration order.
CollisionFixture make_collision_fixture();

struct CollisionResult {
    double p1 = 1.0;
    double p2 = 1.0;
    /// Shared bucket feature f_H.
    std::array<double, 2> feature{};
    /// ||p2 f_H - target2|| / ||target2||
    double rel_error = 0.0;
    double sparsity = 1.0;
    double gamma = 0.0;
};

struct CollisionTrainOptions {
    bool saliency = true;
    PrunerConfig pruner{PrunerMode::admm, 0.04, 1e-6};
    std::int64_t steps = 4000;
    double lr = 1e-2;
    std::uint64_t seed = 0;
};

/// Fits v(x1) = 0 and v(x2) = target2 with Adam; v = p f with saliency, v = f without.
CollisionResult train_collision_fixture(const CollisionFixture& fx, const CollisionTrainOptions& opts);

} // namespace hollow
