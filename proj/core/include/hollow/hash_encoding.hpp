#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hollow/diff_optim.hpp"
#include "hollow/math.hpp"

namespace hollow {

struct HashGridConfig {
    int levels = 16;
    int feature_dim = 2;
    int log2_table_size = 19;
    int base_res = 16;
    int max_res = 1024;

    /// Per-level resolution growth factor. Only meaningful when levels > 1.
    double growth() const;
    std::size_t table_size() const { return std::size_t{1} << log2_table_size; }
    int output_dim() const { return levels * feature_dim; }
    void validate() const;
};

/// floor(base_res * growth^l) for each level, first = base_res, last = max_res.
std::vector<int> level_resolutions(const HashGridConfig& cfg);

/// Spatial hash of an integer lattice corner: (x*1 ^ y*2654435761 ^ z*805459861) mod table_size,
/// with products in wrapping 32-bit unsigned arithmetic. table_size must be a power of two.
std::uint32_t hash_index(const std::array<std::uint32_t, 3>& corner, std::uint32_t table_size);

struct LevelLayout {
    int resolution = 0;
    bool dense = false;
    std::size_t entries = 0;
    /// Offset of the level's first entry in the flat table (in entries, not scalars).
    std::size_t offset = 0;
};

/// Dense iff (N+1)^3 <= table size; entries = min((N+1)^3, table size).
std::vector<LevelLayout> level_layouts(const HashGridConfig& cfg);

/// Trainable scalars held by the feature table.
std::size_t hashgrid_param_count(const HashGridConfig& cfg);

/// The 8 table entries and weights one level contributes for one query.
template <typename T>
struct LevelCorners {
    std::array<std::uint32_t, 8> entry{};
    std::array<T, 8> weight{};
};

/// Multi-resolution hash-grid encoding. Features for all levels live in one
/// flat ParamTensor of shape [total_entries, feature_dim], levels coarse to fine.
template <typename T>
class HashGrid {
public:
    HashGrid() = default;
    explicit HashGrid(const HashGridConfig& cfg, std::uint64_t seed = 0,
                      const InitSpec& init = InitSpec::uniform(-1e-4, 1e-4));

    const HashGridConfig& config() const { return cfg_; }
    const std::vector<LevelLayout>& layouts() const { return layouts_; }
    int output_dim() const { return cfg_.output_dim(); }

    ParamTensor<T>& params() { return params_; }
    const ParamTensor<T>& params() const { return params_; }

    /// Corner entries (global entry indices) and trilinear weights at one level.
    /// Expects x already inside [0,1]^3.
    LevelCorners<T> corners(const Vec3<T>& x, int level) const;

    /// Writes L*F features for x into out. Positions outside the unit cube are
    /// clamped; the return value reports whether clamping happened.
    bool encode(const Vec3<T>& x, std::span<T> out) const;

    /// Scatters weight * upstream into `grads` (flat, same layout as params()).
    void encode_backward(const Vec3<T>& x, std::span<const T> upstream, std::span<T> grads) const;

    /// Same, accumulating into params().grads.
    void encode_backward(const Vec3<T>& x, std::span<const T> upstream) {
        encode_backward(x, upstream, params_.grads);
    }

private:
    HashGridConfig cfg_;
    std::vector<LevelLayout> layouts_;
    ParamTensor<T> params_;
};

/// Clamps to [0,1]^3; returns true if any component moved.
template <typename T>
bool clamp_unit(Vec3<T>& x);

} // namespace hollow
