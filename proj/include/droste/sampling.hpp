#pragma once

// Destination-driven resampling. Pixel (i, j) has its centre at (i + 0.5, j + 0.5).

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "droste/raster.hpp"

namespace droste {

enum class Interpolation { nearest, bilinear, bicubic };

inline std::string to_string(Interpolation i) {
    switch (i) {
        case Interpolation::nearest: return "nearest";
        case Interpolation::bilinear: return "bilinear";
        case Interpolation::bicubic: return "bicubic";
    }
    return "bilinear";
}

inline Interpolation parse_interpolation(const std::string& s) {
    if (s == "nearest") return Interpolation::nearest;
    if (s == "bilinear") return Interpolation::bilinear;
    if (s == "bicubic") return Interpolation::bicubic;
    throw ConfigError("unknown interpolation '" + s + "' (nearest|bilinear|bicubic)");
}

struct SamplerSpec {
    Interpolation interpolation = Interpolation::bilinear;
    int supersampling = 1;  // samples per output-pixel axis

    void validate() const {
        if (supersampling < 1 || supersampling > 8) {
            throw ConfigError("supersampling must be in [1, 8], got " + std::to_string(supersampling));
        }
    }
};

struct Color {
    double r = 0, g = 0, b = 0;

    Color& operator+=(const Color& o) {
        r += o.r;
        g += o.g;
        b += o.b;
        return *this;
    }
    friend Color operator*(double s, const Color& c) { return {s * c.r, s * c.g, s * c.b}; }
    friend Color operator+(Color a, const Color& b) { return a += b; }
};

inline Rgba to_rgba(const Color& c) { return {quantize(c.r), quantize(c.g), quantize(c.b), 255}; }

namespace detail {

inline double cubic_weight(double t) {
    // Catmull-Rom (Keys, a = -0.5).
    t = std::abs(t);
    if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace detail

/// Interpolates `img` at continuous position (x, y). Returns nullopt when the
/// position is outside the image or any tap with nonzero weight has alpha 0.
inline std::optional<Color> sample(const RasterImage& img, double x, double y, Interpolation mode) {
    const int w = img.width(), h = img.height();
    if (!(x >= 0.0 && y >= 0.0 && x <= w && y <= h)) return std::nullopt;
    const double fx = x - 0.5, fy = y - 0.5;

    if (mode == Interpolation::nearest) {
        const Rgba& p = img.at(detail::clampi(int(std::floor(x)), 0, w - 1),
                               detail::clampi(int(std::floor(y)), 0, h - 1));
        if (p.a == 0) return std::nullopt;
        return Color{double(p.r), double(p.g), double(p.b)};
    }

    const int x0 = int(std::floor(fx)), y0 = int(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    Color acc;

    if (mode == Interpolation::bilinear) {
        const double wx[2] = {1.0 - tx, tx}, wy[2] = {1.0 - ty, ty};
        for (int j = 0; j < 2; ++j) {
            if (wy[j] == 0.0) continue;
            const int yy = detail::clampi(y0 + j, 0, h - 1);
            for (int i = 0; i < 2; ++i) {
                if (wx[i] == 0.0) continue;
                const Rgba& p = img.at(detail::clampi(x0 + i, 0, w - 1), yy);
                if (p.a == 0) return std::nullopt;
                const double wt = wx[i] * wy[j];
                acc.r += wt * p.r;
                acc.g += wt * p.g;
                acc.b += wt * p.b;
            }
        }
        return acc;
    }

    double wx[4], wy[4];
    for (int i = 0; i < 4; ++i) {
        wx[i] = detail::cubic_weight(tx - (i - 1));
        wy[i] = detail::cubic_weight(ty - (i - 1));
    }
    for (int j = 0; j < 4; ++j) {
        if (wy[j] == 0.0) continue;
        const int yy = detail::clampi(y0 - 1 + j, 0, h - 1);
        for (int i = 0; i < 4; ++i) {
            if (wx[i] == 0.0) continue;
            const Rgba& p = img.at(detail::clampi(x0 - 1 + i, 0, w - 1), yy);
            if (p.a == 0) return std::nullopt;
            const double wt = wx[i] * wy[j];
            acc.r += wt * p.r;
            acc.g += wt * p.g;
            acc.b += wt * p.b;
        }
    }
    return acc;
}

/// Generic inverse-mapping resampler. `map(x, y)` takes an output position and
/// returns the matching source position, or nullopt when it has no preimage.
/// With supersampling every sub-sample must be valid for the pixel to be opaque.
template <typename MapFn>
RasterImage resample(const RasterImage& source, int out_width, int out_height,
                     const SamplerSpec& sampler, MapFn&& map) {
    sampler.validate();
    RasterImage out(out_width, out_height);
    const int ss = sampler.supersampling;
    const double inv = 1.0 / (ss * ss);
    for (int y = 0; y < out_height; ++y) {
        for (int x = 0; x < out_width; ++x) {
            Color acc;
            bool ok = true;
            for (int sy = 0; sy < ss && ok; ++sy) {
                for (int sx = 0; sx < ss && ok; ++sx) {
                    const double ox = x + (sx + 0.5) / ss, oy = y + (sy + 0.5) / ss;
                    const std::optional<std::array<double, 2>> src = map(ox, oy);
                    if (!src) {
                        ok = false;
                        break;
                    }
                    auto c = sample(source, (*src)[0], (*src)[1], sampler.interpolation);
                    if (!c) {
                        ok = false;
                        break;
                    }
                    acc += *c;
                }
            }
            if (ok) out.at(x, y) = to_rgba(inv * acc);
        }
    }
    return out;
}

}  // namespace droste
