#pragma once

#include <array>
#include <filesystem>
#include <vector>

namespace hollow {

/// Interleaved float image, row-major, values nominally in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, 0.0f) {}

    float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

/// byte = round(clamp(v, 0, 1) * 255)
unsigned char quantize_unit(float v);

/// 8-bit PNG with 1, 3 or 4 channels. Throws DataError on IO failure.
void write_png(const Image& img, const std::filesystem::path& path);

/// Decoded to floats byte/255; gray and palette images expand to RGB, 16-bit is reduced to 8.
Image read_png(const std::filesystem::path& path);

/// Drops alpha by compositing over `background`: rgb * a + bg * (1 - a).
Image composite_over(const Image& rgba, const std::array<double, 3>& background);

} // namespace hollow
