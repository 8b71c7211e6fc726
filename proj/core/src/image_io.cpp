#include "hollow/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "hollow/error.hpp"

namespace hollow {

unsigned char quantize_unit(float v) {
    if (!(v > 0.0f)) return 0;
    if (v >= 1.0f) return 255;
    return static_cast<unsigned char>(std::lround(static_cast<double>(v) * 255.0));
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw DataError(std::string("libpng: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

} // namespace

void write_png(const Image& img, const std::filesystem::path& path) {
    int color_type = 0;
    switch (img.channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGBA; break;
    default: throw UsageError("write_png: unsupported channel count " + std::to_string(img.channels));
    }
    if (img.width <= 0 || img.height <= 0 ||
        img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels) {
        throw UsageError("write_png: image buffer does not match its dimensions");
    }
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng initialisation failed");
    }
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
    try {
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                     color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < img.height; ++y) {
            const float* src = img.data.data() + static_cast<std::size_t>(y) * row.size();
            for (std::size_t i = 0; i < row.size(); ++i) row[i] = quantize_unit(src[i]);
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    if (std::fflush(fp.get()) != 0) {
        throw DataError("write failed for " + path.string());
    }
}

Image read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) {
        throw DataError("cannot open image " + path.string());
    }
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw DataError(path.string() + " is not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng initialisation failed");
    }
    Image img;
    try {
        png_init_io(png, fp.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        const auto bit_depth = png_get_bit_depth(png, info);
        const auto color = png_get_color_type(png, info);
        if (bit_depth == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
        png_read_update_info(png, info);
        img.width = static_cast<int>(png_get_image_width(png, info));
        img.height = static_cast<int>(png_get_image_height(png, info));
        img.channels = static_cast<int>(png_get_channels(png, info));
        const std::size_t stride = png_get_rowbytes(png, info);
        std::vector<unsigned char> buf(stride * static_cast<std::size_t>(img.height));
        std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
        for (int y = 0; y < img.height; ++y) rows[static_cast<std::size_t>(y)] = buf.data() + stride * y;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
        for (int y = 0; y < img.height; ++y) {
            for (int i = 0; i < img.width * img.channels; ++i) {
                img.data[static_cast<std::size_t>(y) * img.width * img.channels + i] =
                    static_cast<float>(rows[static_cast<std::size_t>(y)][i]) / 255.0f;
            }
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Image composite_over(const Image& src, const std::array<double, 3>& background) {
    if (src.channels == 3) {
        return src;
    }
    if (src.channels != 4) {
        throw DataError("expected an RGB or RGBA image, got " + std::to_string(src.channels) + " channels");
    }
    Image out(src.width, src.height, 3);
    const std::size_t n = static_cast<std::size_t>(src.width) * src.height;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = src.data[i * 4 + 3];
        for (std::size_t c = 0; c < 3; ++c) {
            out.data[i * 3 + c] = static_cast<float>(src.data[i * 4 + c] * a + background[c] * (1.0 - a));
        }
    }
    return out;
}

} // namespace hollow
