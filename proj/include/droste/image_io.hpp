#pragma once

// PNG (read/write, via libpng's simplified API) and JPEG (read only, libjpeg).

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <jpeglib.h>

#include "droste/raster.hpp"

namespace droste::io {

namespace detail {

inline bool has_png_magic(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    unsigned char sig[8] = {};
    f.read(reinterpret_cast<char*>(sig), 8);
    return f.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

inline bool has_jpeg_magic(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    unsigned char sig[3] = {};
    f.read(reinterpret_cast<char*>(sig), 3);
    return f.gcount() == 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF;
}

inline void read_png_raw(const std::filesystem::path& path, png_uint_32 format, int& w, int& h,
                         std::vector<std::uint8_t>& buf) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    }
    image.format = format;
    buf.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + msg);
    }
    w = static_cast<int>(image.width);
    h = static_cast<int>(image.height);
}

struct JpegErr {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

inline RasterImage read_jpeg(const std::filesystem::path& path) {
    std::FILE* fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) throw IoError("cannot open " + path.string());
    jpeg_decompress_struct cinfo;
    JpegErr err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_error_exit;
    std::vector<std::uint8_t> rgb;
    int w = 0, h = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        std::fclose(fp);
        throw IoError("cannot decode JPEG " + path.string() + ": " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    w = static_cast<int>(cinfo.output_width);
    h = static_cast<int>(cinfo.output_height);
    rgb.resize(std::size_t(w) * h * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = rgb.data() + std::size_t(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);

    RasterImage img(w, h);
    auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = {rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2], 255};
    }
    return img;
}

}  // namespace detail

/// Reads PNG (any colour type) or JPEG into RGBA.
inline RasterImage read_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
    if (detail::has_jpeg_magic(path)) return detail::read_jpeg(path);
    if (!detail::has_png_magic(path)) {
        throw IoError("unsupported image format (PNG or JPEG expected): " + path.string());
    }
    int w = 0, h = 0;
    std::vector<std::uint8_t> buf;
    detail::read_png_raw(path, PNG_FORMAT_RGBA, w, h, buf);
    RasterImage img(w, h);
    std::memcpy(img.pixels().data(), buf.data(), buf.size());
    return img;
}

inline void write_png(const std::filesystem::path& path, const RasterImage& img) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGBA;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.pixels().data(), 0,
                                 nullptr)) {
        throw IoError("cannot write PNG " + path.string() + ": " + image.message);
    }
}

inline void write_mask(const std::filesystem::path& path, const Mask& mask) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(mask.width());
    image.height = static_cast<png_uint_32>(mask.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, mask.values().data(), 0,
                                 nullptr)) {
        throw IoError("cannot write PNG " + path.string() + ": " + image.message);
    }
}

/// Reads a mask PNG; values >= 128 become holes (255), the rest 0.
inline Mask read_mask(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
    if (!detail::has_png_magic(path)) throw IoError("mask must be a PNG: " + path.string());
    int w = 0, h = 0;
    std::vector<std::uint8_t> buf;
    detail::read_png_raw(path, PNG_FORMAT_GRAY, w, h, buf);
    Mask m(w, h);
    std::memcpy(m.values().data(), buf.data(), buf.size());
    m.binarize();
    return m;
}

}  // namespace droste::io
