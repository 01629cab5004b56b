#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "droste/error.hpp"

namespace droste {

struct Rgba {
    std::uint8_t r = 0, g = 0, b = 0, a = 0;
    friend bool operator==(const Rgba&, const Rgba&) = default;
};

inline std::uint8_t quantize(double v) noexcept {
    if (!(v > 0.0)) return 0;  // also maps NaN to 0
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

/// RGBA raster, 8 bits per channel, row-major, origin top-left, y down.
/// alpha == 0 marks pixels with no source data.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, Rgba fill = {0, 0, 0, 0}) : w_(width), h_(height) {
        if (width < 1 || height < 1) {
            throw ConfigError("image dimensions must be >= 1, got " + std::to_string(width) + "x" +
                              std::to_string(height));
        }
        px_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    int width() const noexcept { return w_; }
    int height() const noexcept { return h_; }
    bool empty() const noexcept { return px_.empty(); }
    std::size_t size() const noexcept { return px_.size(); }

    Rgba& at(int x, int y) { return px_[static_cast<std::size_t>(y) * w_ + x]; }
    const Rgba& at(int x, int y) const { return px_[static_cast<std::size_t>(y) * w_ + x]; }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < w_ && y < h_; }

    std::span<Rgba> pixels() noexcept { return px_; }
    std::span<const Rgba> pixels() const noexcept { return px_; }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    int w_ = 0, h_ = 0;
    std::vector<Rgba> px_;
};

/// Single-channel hole mask; 255 = hole (to be filled), 0 = keep.
class Mask {
public:
    static constexpr std::uint8_t kHole = 255;

    Mask() = default;
    Mask(int width, int height, std::uint8_t fill = 0) : w_(width), h_(height) {
        if (width < 1 || height < 1) throw ConfigError("mask dimensions must be >= 1");
        v_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    int width() const noexcept { return w_; }
    int height() const noexcept { return h_; }
    std::size_t size() const noexcept { return v_.size(); }

    std::uint8_t& at(int x, int y) { return v_[static_cast<std::size_t>(y) * w_ + x]; }
    std::uint8_t at(int x, int y) const { return v_[static_cast<std::size_t>(y) * w_ + x]; }
    bool hole(int x, int y) const { return at(x, y) == kHole; }

    std::span<std::uint8_t> values() noexcept { return v_; }
    std::span<const std::uint8_t> values() const noexcept { return v_; }

    void binarize(std::uint8_t threshold = 128) {
        for (auto& v : v_) v = v >= threshold ? kHole : 0;
    }

    std::size_t hole_count() const {
        return static_cast<std::size_t>(std::count(v_.begin(), v_.end(), kHole));
    }
    double coverage() const { return v_.empty() ? 0.0 : double(hole_count()) / double(v_.size()); }
    bool empty_hole() const { return hole_count() == 0; }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int w_ = 0, h_ = 0;
    std::vector<std::uint8_t> v_;
};

/// Float plane used for grayscale working data.
struct Plane {
    int width = 0, height = 0;
    std::vector<double> v;

    Plane() = default;
    Plane(int w, int h, double fill = 0.0) : width(w), height(h), v(std::size_t(w) * h, fill) {}

    double& operator()(int x, int y) { return v[std::size_t(y) * width + x]; }
    double operator()(int x, int y) const { return v[std::size_t(y) * width + x]; }
};

/// ITU-R BT.601 luma on the 0..255 scale; alpha is ignored.
inline Plane to_gray(const RasterImage& img) {
    Plane g(img.width(), img.height());
    auto src = img.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        g.v[i] = 0.299 * src[i].r + 0.587 * src[i].g + 0.114 * src[i].b;
    }
    return g;
}

inline RasterImage from_gray(const Plane& g) {
    RasterImage out(g.width, g.height);
    auto dst = out.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const auto q = quantize(g.v[i]);
        dst[i] = {q, q, q, 255};
    }
    return out;
}

inline void check_same_size(const RasterImage& img, const Mask& mask) {
    if (img.width() != mask.width() || img.height() != mask.height()) {
        throw ConfigError("mask is " + std::to_string(mask.width()) + "x" +
                          std::to_string(mask.height()) + " but image is " +
                          std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
}

inline constexpr double kPsnrCap = 99.0;

/// PSNR in dB over RGB of pixels that are opaque (alpha == 255) in both images.
/// Identical inputs report kPsnrCap.
inline double psnr(const RasterImage& a, const RasterImage& b, const Mask* region = nullptr) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw ConfigError("psnr: image sizes differ");
    }
    double se = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            const Rgba& p = a.at(x, y);
            const Rgba& q = b.at(x, y);
            if (p.a != 255 || q.a != 255) continue;
            if (region && !region->hole(x, y)) continue;
            const double dr = double(p.r) - q.r, dg = double(p.g) - q.g, db = double(p.b) - q.b;
            se += dr * dr + dg * dg + db * db;
            n += 3;
        }
    }
    if (n == 0) throw ConfigError("psnr: no overlapping valid pixels");
    if (se == 0.0) return kPsnrCap;
    const double mse = se / double(n);
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

}  // namespace droste
