#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hollow/config.hpp"
#include "hollow/diff_optim.hpp"
#include "hollow/radiance_field.hpp"

namespace hollow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Config config;
    SceneBox box;
    std::int64_t step = 0;
    std::int64_t epoch = 0;
    double gamma = 0.0;
    RadianceField<float> model;
    /// Adam moments in parameter order; empty when not stored.
    std::vector<AdamState<float>> moments;
};

/// Layout (all integers little-endian):
///   "HNRF" | u32 version | u64 header bytes | JSON header
///   | u64 array count | per array: u64 element count, float32[count]
///   | u64 FNV-1a of everything before it.
/// Arrays: hashgrid (levels coarse to fine), decoder tensors in layer order,
/// saliency grid, then m and v per tensor when moments are stored.
/// Written to <path>.tmp and renamed into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws IntegrityError on bad magic, version, length, checksum or header.
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace hollow
