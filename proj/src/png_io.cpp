#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fmseg/image.hpp"

namespace fmseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
    throw std::runtime_error("png: " + std::string(what) + ": " + path);
}

// Reads an 8-bit gray or RGB byte raster (alpha stripped, palette expanded).
std::vector<unsigned char> read_bytes(const std::string& path, std::size_t& height,
                                      std::size_t& width, std::size_t& channels) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(path, "info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "decode error");
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_byte color_type = png_get_color_type(png, info);
    png_byte bit_depth = png_get_bit_depth(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    height = png_get_image_height(png, info);
    width = png_get_image_width(png, info);
    channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "unsupported channel count");
    }

    std::vector<unsigned char> bytes(height * width * channels);
    std::vector<png_bytep> rows(height);
    for (std::size_t y = 0; y < height; ++y) rows[y] = bytes.data() + y * width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return bytes;
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes,
                 std::size_t height, std::size_t width, std::size_t channels) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(path, "info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "encode error");
    }

    png_init_io(png, fp.get());
    int color = (channels == 1) ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(height);
    for (std::size_t y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(bytes.data() + y * width * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

unsigned char quantize(real v) {
    real c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(c * 255.0));
}

}  // namespace

Image load_png(const std::string& path) {
    std::size_t h = 0, w = 0, c = 0;
    std::vector<unsigned char> bytes = read_bytes(path, h, w, c);
    Image img(c, h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch)
                img.pixels.at(ch, y, x) = static_cast<real>(bytes[(y * w + x) * c + ch]) / 255.0;
    return img;
}

void save_png(const std::string& path, const Image& image) {
    image.validate();
    const std::size_t c = image.channels(), h = image.height(), w = image.width();
    std::vector<unsigned char> bytes(h * w * c);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch)
                bytes[(y * w + x) * c + ch] = quantize(image.pixels.at(ch, y, x));
    write_bytes(path, bytes, h, w, c);
}

Tensor load_mask_png(const std::string& path) {
    std::size_t h = 0, w = 0, c = 0;
    std::vector<unsigned char> bytes = read_bytes(path, h, w, c);
    Tensor mask({h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const unsigned char* px = bytes.data() + (y * w + x) * c;
            real v = (px[0] >= 128) ? 1.0 : 0.0;
            for (std::size_t ch = 1; ch < c; ++ch) {
                real vc = (px[ch] >= 128) ? 1.0 : 0.0;
                if (vc != v)
                    throw std::runtime_error("png: mask channels disagree after threshold: " + path);
            }
            mask.at(y, x) = v;
        }
    }
    return mask;
}

void save_mask_png(const std::string& path, const Tensor& mask) {
    if (mask.rank() != 2) throw std::invalid_argument("save_mask_png: rank 2 mask expected");
    const std::size_t h = mask.dim(0), w = mask.dim(1);
    std::vector<unsigned char> bytes(h * w);
    for (std::size_t i = 0; i < h * w; ++i) bytes[i] = (mask[i] != 0.0) ? 255 : 0;
    write_bytes(path, bytes, h, w, 1);
}

}  // namespace fmseg
