#include "hollow/hash_encoding.hpp"

#include <algorithm>
#include <cmath>

#include "hollow/error.hpp"

namespace hollow {

double HashGridConfig::growth() const {
    if (levels <= 1) {
        return 1.0;
    }
    return std::exp((std::log(static_cast<double>(max_res)) - std::log(static_cast<double>(base_res))) /
                    static_cast<double>(levels - 1));
}

void HashGridConfig::validate() const {
    if (levels < 1) {
        throw ConfigError("hashgrid: levels must be >= 1");
    }
    if (feature_dim < 1) {
        throw ConfigError("hashgrid: feature_dim must be >= 1");
    }
    if (log2_table_size < 1 || log2_table_size > 30) {
        throw ConfigError("hashgrid: log2_table_size out of range [1, 30]");
    }
    if (base_res < 1) {
        throw ConfigError("hashgrid: base_res must be >= 1");
    }
    if (base_res > max_res) {
        throw ConfigError("hashgrid: base_res (" + std::to_string(base_res) + ") exceeds max_res (" +
                          std::to_string(max_res) + ")");
    }
}

std::vector<int> level_resolutions(const HashGridConfig& cfg) {
    cfg.validate();
    std::vector<int> res(static_cast<std::size_t>(cfg.levels));
    const double b = cfg.growth();
    for (int l = 0; l < cfg.levels; ++l) {
        // The small bias keeps exact powers (e.g. the last level) from rounding down.
        res[static_cast<std::size_t>(l)] =
            static_cast<int>(std::floor(static_cast<double>(cfg.base_res) * std::pow(b, l) + 1e-9));
    }
    res.front() = cfg.base_res;
    if (cfg.levels > 1) {
        res.back() = cfg.max_res;
    }
    return res;
}

std::uint32_t hash_index(const std::array<std::uint32_t, 3>& corner, std::uint32_t table_size) {
    constexpr std::uint32_t primes[3] = {1u, 2654435761u, 805459861u};
    const std::uint32_t h = (corner[0] * primes[0]) ^ (corner[1] * primes[1]) ^ (corner[2] * primes[2]);
    return h & (table_size - 1u);
}

std::vector<LevelLayout> level_layouts(const HashGridConfig& cfg) {
    const auto res = level_resolutions(cfg);
    const std::size_t table = cfg.table_size();
    std::vector<LevelLayout> out;
    out.reserve(res.size());
    std::size_t offset = 0;
    for (int n : res) {
        const std::size_t side = static_cast<std::size_t>(n) + 1;
        const std::size_t corners = side * side * side;
        LevelLayout layout;
        layout.resolution = n;
        layout.dense = corners <= table;
        layout.entries = std::min(corners, table);
        layout.offset = offset;
        offset += layout.entries;
        out.push_back(layout);
    }
    return out;
}

std::size_t hashgrid_param_count(const HashGridConfig& cfg) {
    std::size_t entries = 0;
    for (const auto& l : level_layouts(cfg)) {
        entries += l.entries;
    }
    return entries * static_cast<std::size_t>(cfg.feature_dim);
}

template <typename T>
bool clamp_unit(Vec3<T>& x) {
    bool clamped = false;
    for (auto& c : x) {
        // NaN compares false on both sides and is mapped to 0.
        const T v = c >= T(0) ? (c <= T(1) ? c : T(1)) : T(0);
        clamped |= v != c;
        c = v;
    }
    return clamped;
}

template <typename T>
HashGrid<T>::HashGrid(const HashGridConfig& cfg, std::uint64_t seed, const InitSpec& init)
    : cfg_(cfg), layouts_(level_layouts(cfg)) {
    std::size_t entries = 0;
    for (const auto& l : layouts_) {
        entries += l.entries;
    }
    params_ = seeded_init<T>({entries, static_cast<std::size_t>(cfg.feature_dim)}, init, seed, ParamRole::hashgrid);
}

template <typename T>
LevelCorners<T> HashGrid<T>::corners(const Vec3<T>& x, int level) const {
    const auto& layout = layouts_[static_cast<std::size_t>(level)];
    const int n = layout.resolution;
    std::array<std::uint32_t, 3> base{};
    Vec3<T> frac{};
    for (int d = 0; d < 3; ++d) {
        const double pos = static_cast<double>(x[d]) * n;
        int cell = static_cast<int>(std::floor(pos));
        cell = std::clamp(cell, 0, n - 1);
        base[d] = static_cast<std::uint32_t>(cell);
        frac[d] = static_cast<T>(pos - cell);
    }
    LevelCorners<T> out;
    out.weight = trilinear_weights(frac);
    const std::uint32_t side = static_cast<std::uint32_t>(n) + 1u;
    const std::uint32_t table = static_cast<std::uint32_t>(cfg_.table_size());
    for (int c = 0; c < 8; ++c) {
        const std::array<std::uint32_t, 3> corner{base[0] + (c & 1u), base[1] + ((c >> 1) & 1u),
                                                  base[2] + ((c >> 2) & 1u)};
        const std::uint32_t local =
            layout.dense ? corner[0] + side * (corner[1] + side * corner[2]) : hash_index(corner, table);
        out.entry[c] = static_cast<std::uint32_t>(layout.offset) + local;
    }
    return out;
}

template <typename T>
bool HashGrid<T>::encode(const Vec3<T>& x_in, std::span<T> out) const {
    Vec3<T> x = x_in;
    const bool clamped = clamp_unit(x);
    const std::size_t f_dim = static_cast<std::size_t>(cfg_.feature_dim);
    const T* table = params_.values.data();
    for (int l = 0; l < cfg_.levels; ++l) {
        const auto lc = corners(x, l);
        T* dst = out.data() + static_cast<std::size_t>(l) * f_dim;
        for (std::size_t f = 0; f < f_dim; ++f) {
            dst[f] = T(0);
        }
        for (int c = 0; c < 8; ++c) {
            const T* src = table + static_cast<std::size_t>(lc.entry[c]) * f_dim;
            for (std::size_t f = 0; f < f_dim; ++f) {
                dst[f] += lc.weight[c] * src[f];
            }
        }
    }
    return clamped;
}

template <typename T>
void HashGrid<T>::encode_backward(const Vec3<T>& x_in, std::span<const T> upstream, std::span<T> grads) const {
    Vec3<T> x = x_in;
    clamp_unit(x);
    const std::size_t f_dim = static_cast<std::size_t>(cfg_.feature_dim);
    for (int l = 0; l < cfg_.levels; ++l) {
        const T* up = upstream.data() + static_cast<std::size_t>(l) * f_dim;
        bool any = false;
        for (std::size_t f = 0; f < f_dim; ++f) {
            any |= up[f] != T(0);
        }
        if (!any) {
            continue;
        }
        const auto lc = corners(x, l);
        for (int c = 0; c < 8; ++c) {
            T* dst = grads.data() + static_cast<std::size_t>(lc.entry[c]) * f_dim;
            for (std::size_t f = 0; f < f_dim; ++f) {
                dst[f] += lc.weight[c] * up[f];
            }
        }
    }
}

template bool clamp_unit<float>(Vec3<float>&);
template bool clamp_unit<double>(Vec3<double>&);
template class HashGrid<float>;
template class HashGrid<double>;

} // namespace hollow
