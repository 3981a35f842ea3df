// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/dataio/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "objocc/core/errors.hpp"

namespace objocc::dataio {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

// Decodes into either 8-bit RGB or 16-bit gray depending on `want_gray16`.
struct Decoded {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;
    std::vector<std::uint16_t> gray16;
};

Decoded decode_png(const fs::path& path, bool want_gray16) {
    FilePtr f = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8)) throw FormatError(path.string() + " is not a PNG");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed");
    }
    Decoded out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt PNG " + path.string());
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (want_gray16) {
        if (color != PNG_COLOR_TYPE_GRAY || depth != 16) {
            png_destroy_read_struct(&png, &info, nullptr);
            throw FormatError(path.string() + " is not a 16-bit grayscale PNG");
        }
        png_set_swap(png);
    } else {
        if (depth == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
        if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> buf(stride * out.height);
    rows.resize(out.height);
    for (int r = 0; r < out.height; ++r) rows[r] = buf.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    if (want_gray16) {
        out.gray16.resize(static_cast<std::size_t>(out.width) * out.height);
        for (std::size_t i = 0; i < out.gray16.size(); ++i) {
            out.gray16[i] = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
        }
    } else {
        out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
        for (int r = 0; r < out.height; ++r) {
            std::copy_n(buf.data() + r * stride, static_cast<std::size_t>(out.width) * 3,
                        out.rgb.data() + static_cast<std::size_t>(r) * out.width * 3);
        }
    }
    return out;
}

void encode_png(const fs::path& path, int width, int height, bool gray16, const std::uint8_t* data) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed for " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, gray16 ? 16 : 8, gray16 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (gray16) png_set_swap(png);
    const std::size_t stride = static_cast<std::size_t>(width) * (gray16 ? 2 : 3);
    for (int r = 0; r < height; ++r) png_write_row(png, const_cast<png_bytep>(data + r * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Image Image::blank(int width, int height) {
    Image im;
    im.width = width;
    im.height = height;
    im.rgb.assign(static_cast<std::size_t>(width) * height * 3, 0);
    return im;
}

Image read_png(const fs::path& path) {
    Decoded d = decode_png(path, false);
    return Image{d.width, d.height, std::move(d.rgb)};
}

void write_png(const fs::path& path, const Image& image) {
    if (image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
        throw ShapeError("image buffer does not match its size");
    }
    encode_png(path, image.width, image.height, false, image.rgb.data());
}

DepthMap read_depth_png(const fs::path& path) {
    Decoded d = decode_png(path, true);
    DepthMap m{d.width, d.height, std::vector<double>(d.gray16.size())};
    for (std::size_t i = 0; i < d.gray16.size(); ++i) m.depth[i] = d.gray16[i] / 256.0;
    return m;
}

void write_depth_png(const fs::path& path, const DepthMap& depth) {
    std::vector<std::uint16_t> raw(depth.depth.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<std::uint16_t>(std::clamp(std::lround(depth.depth[i] * 256.0), 0L, 65535L));
    }
    encode_png(path, depth.width, depth.height, true, reinterpret_cast<const std::uint8_t*>(raw.data()));
}

Image crop(const Image& image, int width, int height) {
    if (width > image.width || height > image.height) throw ShapeError("crop larger than image");
    Image out = Image::blank(width, height);
    for (int r = 0; r < height; ++r) {
        std::copy_n(image.pixel(r, 0), static_cast<std::size_t>(width) * 3, out.pixel(r, 0));
    }
    return out;
}

nn::Tensor image_to_tensor(const Image& image) {
    const std::size_t hw = static_cast<std::size_t>(image.width) * image.height;
    std::vector<double> v(3 * hw);
    for (std::size_t p = 0; p < hw; ++p) {
        for (int c = 0; c < 3; ++c) v[c * hw + p] = image.rgb[p * 3 + c] / 127.5 - 1.0;
    }
    return nn::Tensor::from({3, image.height, image.width, 1}, std::move(v));
}

}  // namespace objocc::dataio
