#pragma once

// Synthetic pictures for the test suites. Droste-consistent fixtures are built
// with the forward map directly (not through the warp engine) so that they can
// act as oracles for unroll/rewarp.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "droste/complex_map.hpp"
#include "droste/raster.hpp"
#include "droste/sampling.hpp"

namespace droste::fixtures {

/// A straight picture given on the log plane; must repeat under u -> u + ln P and u -> u + 2*pi*i.
using LogPattern = std::function<Color(Complex u)>;

inline LogPattern smooth_pattern(double period) {
    const double L = std::log(period);
    return [L](Complex u) {
        const double a = kTwoPi * u.real() / L;
        const double b = u.imag();
        return Color{128.0 + 70.0 * std::cos(a), 128.0 + 60.0 * std::sin(a + b),
                     128.0 + 50.0 * std::cos(b - 0.5)};
    };
}

/// Soft checkerboard with `na` cells per period along Re u and `nb` cells around Im u.
inline LogPattern checker_pattern(double period, int na = 8, int nb = 16, double softness = 6.0) {
    const double L = std::log(period);
    return [=](Complex u) {
        const double a = std::sin(std::numbers::pi * na * u.real() / L);
        const double b = std::sin(nb * u.imag() * 0.5);
        const double v = 127.5 + 110.0 * std::tanh(softness * a * b);
        return Color{v, v, v};
    };
}

/// Textured, never near-white pattern for blank-extraction tests (max channel < 240).
inline LogPattern texture_pattern(double period) {
    const double L = std::log(period);
    return [L](Complex u) {
        const double a = kTwoPi * u.real() / L;
        const double b = u.imag();
        return Color{110.0 + 60.0 * std::cos(3 * a + b), 100.0 + 50.0 * std::sin(2 * a - 2 * b),
                     90.0 + 40.0 * std::cos(a + 3 * b)};
    };
}

/// Warped picture: pixel p shows pattern(alpha * Ln z), z = (p - center) / base_radius.
inline RasterImage warped_fixture(int w, int h, const DrosteParams& p, const LogPattern& pattern,
                                  int ss = 3) {
    RasterImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            Color acc;
            for (int j = 0; j < ss; ++j) {
                for (int i = 0; i < ss; ++i) {
                    const Complex z = (Complex{x + (i + 0.5) / ss, y + (j + 0.5) / ss} - p.center) /
                                      p.base_radius;
                    acc += pattern(p.alpha * std::log(z));
                }
            }
            img.at(x, y) = to_rgba((1.0 / (ss * ss)) * acc);
        }
    }
    return img;
}

/// Straight view k rendered straight from the pattern (oracle for unroll).
inline RasterImage straight_view_oracle(int n, int k, double margin, const DrosteParams& p,
                                        const LogPattern& pattern, int ss = 3) {
    RasterImage img(n, n);
    const double e = (1.0 + margin) * std::pow(p.zoom_step, -k);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            Color acc;
            for (int j = 0; j < ss; ++j) {
                for (int i = 0; i < ss; ++i) {
                    const Complex zeta{((x + (i + 0.5) / ss) / n * 2 - 1) * e,
                                       ((y + (j + 0.5) / ss) / n * 2 - 1) * e};
                    acc += pattern(std::log(zeta));
                }
            }
            img.at(x, y) = to_rgba((1.0 / (ss * ss)) * acc);
        }
    }
    return img;
}

/// Paints a white disk (hard edge) of `radius` pixels around the center.
inline void blank_center(RasterImage& img, Complex center, double radius) {
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (std::abs(Complex{x + 0.5, y + 0.5} - center) < radius) img.at(x, y) = {255, 255, 255, 255};
}

/// "Dead leaves" scene: overlapping random shaded disks (radii ~ r^-3, so the
/// scene is roughly scale invariant), anti-aliased, with a 1/f-like value-noise
/// texture on top. Flat untextured leaves look synthetic to BRISQUE; the texture
/// puts the image statistics in the range of photographs.
inline RasterImage dead_leaves(int w, int h, std::uint64_t seed, double texture = 20.0, int ss = 3) {
    std::mt19937_64 eng(seed);
    auto uni = [&] { return double(eng() >> 11) * 0x1.0p-53; };
    struct Leaf {
        double cx, cy, r, c[3], gx, gy;
    };
    std::vector<Leaf> leaves;
    const double rmin = 0.01 * std::min(w, h), rmax = 0.25 * std::min(w, h);
    for (int l = 0; l < 600; ++l) {
        const double u = uni();
        const double rad = 1.0 / std::sqrt((1.0 - u) / (rmin * rmin) + u / (rmax * rmax));
        Leaf q{uni() * w, uni() * h, rad, {30 + 195 * uni(), 30 + 195 * uni(), 30 + 195 * uni()},
               (uni() - 0.5) * 80 / rad, (uni() - 0.5) * 80 / rad};
        leaves.push_back(q);
    }
    constexpr int octaves = 6;
    std::vector<std::vector<double>> grids;
    for (int o = 0; o < octaves; ++o) {
        const int g = 4 << o;
        std::vector<double> v(std::size_t(g + 1) * (g + 1));
        for (auto& x : v) x = uni() * 2 - 1;
        grids.push_back(std::move(v));
    }
    auto noise = [&](double x, double y) {
        double s = 0, amp = 1;
        for (int o = 0; o < octaves; ++o) {
            const int g = 4 << o;
            const double fx = x / w * g, fy = y / h * g;
            const int ix = std::min(g - 1, int(fx)), iy = std::min(g - 1, int(fy));
            double tx = fx - ix, ty = fy - iy;
            tx = tx * tx * (3 - 2 * tx);
            ty = ty * ty * (3 - 2 * ty);
            auto at = [&](int i, int j) { return grids[o][std::size_t(j) * (g + 1) + i]; };
            s += amp * ((at(ix, iy) * (1 - tx) + at(ix + 1, iy) * tx) * (1 - ty) +
                        (at(ix, iy + 1) * (1 - tx) + at(ix + 1, iy + 1) * tx) * ty);
            amp *= 0.7;
        }
        return s;
    };
    RasterImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[3] = {0, 0, 0};
            for (int j = 0; j < ss; ++j) {
                for (int i = 0; i < ss; ++i) {
                    const double px = x + (i + 0.5) / ss, py = y + (j + 0.5) / ss;
                    double c[3] = {128, 128, 128};
                    for (auto it = leaves.rbegin(); it != leaves.rend(); ++it) {
                        const double dx = px - it->cx, dy = py - it->cy;
                        if (dx * dx + dy * dy > it->r * it->r) continue;
                        const double shade = it->gx * dx + it->gy * dy;
                        for (int k = 0; k < 3; ++k) c[k] = it->c[k] + shade;
                        break;
                    }
                    for (int k = 0; k < 3; ++k) acc[k] += c[k];
                }
            }
            const double t = texture * noise(x + 0.5, y + 0.5);
            const double inv = 1.0 / (ss * ss);
            img.at(x, y) = {quantize(acc[0] * inv + t), quantize(acc[1] * inv + t), quantize(acc[2] * inv + t), 255};
        }
    }
    return img;
}

/// Adds N(0, sigma^2) noise per channel (Box-Muller on a seeded mt19937_64).
inline RasterImage add_gaussian_noise(const RasterImage& src, double sigma, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    auto uni = [&] { return (double(eng() >> 11) + 0.5) * 0x1.0p-53; };
    RasterImage out = src;
    for (auto& p : out.pixels()) {
        auto noisy = [&](std::uint8_t v) {
            const double n = std::sqrt(-2.0 * std::log(uni())) * std::cos(kTwoPi * uni());
            return quantize(v + sigma * n);
        };
        p.r = noisy(p.r);
        p.g = noisy(p.g);
        p.b = noisy(p.b);
    }
    return out;
}

/// Separable Gaussian blur with replicated borders.
inline RasterImage gaussian_blur(const RasterImage& src, double sigma) {
    const int rad = int(std::ceil(3 * sigma));
    std::vector<double> k(2 * rad + 1);
    double s = 0;
    for (int i = -rad; i <= rad; ++i) s += k[i + rad] = std::exp(-i * i / (2 * sigma * sigma));
    for (auto& v : k) v /= s;
    const int w = src.width(), h = src.height();
    std::vector<Color> tmp(std::size_t(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Color c;
            for (int i = -rad; i <= rad; ++i) {
                const Rgba& p = src.at(std::clamp(x + i, 0, w - 1), y);
                c += k[i + rad] * Color{double(p.r), double(p.g), double(p.b)};
            }
            tmp[std::size_t(y) * w + x] = c;
        }
    RasterImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Color c;
            for (int i = -rad; i <= rad; ++i) c += k[i + rad] * tmp[std::size_t(std::clamp(y + i, 0, h - 1)) * w + x];
            out.at(x, y) = to_rgba(c);
        }
    return out;
}

}  // namespace droste::fixtures
