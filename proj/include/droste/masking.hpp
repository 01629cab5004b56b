#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "droste/raster.hpp"

namespace droste {

// ---------------------------------------------------------------------------
// Morphology helpers

/// Labels 8-connected components of `on` pixels. Returns the label image
/// (-1 = off) and fills `areas` with one entry per label.
inline std::vector<int> label_components(const std::vector<std::uint8_t>& on, int w, int h,
                                         std::vector<std::size_t>& areas) {
    std::vector<int> label(on.size(), -1);
    std::vector<int> stack;
    areas.clear();
    for (int start = 0; start < w * h; ++start) {
        if (!on[start] || label[start] >= 0) continue;
        const int id = static_cast<int>(areas.size());
        areas.push_back(0);
        label[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            ++areas[id];
            const int px = p % w, py = p / w;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int qx = px + dx, qy = py + dy;
                    if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                    const int q = qy * w + qx;
                    if (on[q] && label[q] < 0) {
                        label[q] = id;
                        stack.push_back(q);
                    }
                }
            }
        }
    }
    return label;
}

/// Dilation by a Euclidean disk of the given radius.
inline Mask dilate(const Mask& m, int radius) {
    if (radius <= 0) return m;
    const int w = m.width(), h = m.height();
    std::vector<std::array<int, 2>> offsets;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) offsets.push_back({dx, dy});
    Mask out = m;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m.hole(x, y)) continue;
            const bool interior = x > 0 && y > 0 && x < w - 1 && y < h - 1 && m.hole(x - 1, y) &&
                                  m.hole(x + 1, y) && m.hole(x, y - 1) && m.hole(x, y + 1);
            if (interior) continue;
            for (auto [dx, dy] : offsets) {
                const int qx = x + dx, qy = y + dy;
                if (qx >= 0 && qy >= 0 && qx < w && qy < h) out.at(qx, qy) = Mask::kHole;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Blank extraction

struct BlankSpec {
    int whiteness_threshold = 250;  // min(R, G, B) >= threshold counts as blank
    int dilation_px = 2;
    // Near-white components at least this large are kept even when they do not
    // touch the seed. 0 keeps only the seed and what touches it.
    std::size_t min_component_px = 0;
};

struct BlankResult {
    Mask mask;
    bool warning = false;  // no near-white component found
};

/// Extracts the blank region: the largest near-white component (the seed),
/// every near-white component touching the dilated seed, then a final dilation.
inline BlankResult extract_blank(const RasterImage& image, const BlankSpec& spec = {}) {
    if (image.empty()) throw ConfigError("extract_blank: empty image");
    const int w = image.width(), h = image.height();
    std::vector<std::uint8_t> white(image.size(), 0);
    auto px = image.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const int mn = std::min({px[i].r, px[i].g, px[i].b});
        white[i] = (px[i].a != 0 && mn >= spec.whiteness_threshold) ? 1 : 0;
    }
    std::vector<std::size_t> areas;
    const auto label = label_components(white, w, h, areas);

    BlankResult res{Mask(w, h), false};
    if (areas.empty()) {
        res.warning = true;
        return res;
    }
    const int seed = static_cast<int>(std::max_element(areas.begin(), areas.end()) - areas.begin());

    Mask seed_mask(w, h);
    for (std::size_t i = 0; i < label.size(); ++i)
        if (label[i] == seed) seed_mask.values()[i] = Mask::kHole;
    const Mask reach = dilate(seed_mask, std::max(1, spec.dilation_px));

    std::vector<std::uint8_t> keep(areas.size(), 0);
    keep[seed] = 1;
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (label[i] < 0) continue;
        if (reach.values()[i] == Mask::kHole) keep[label[i]] = 1;
        if (spec.min_component_px > 0 && areas[label[i]] >= spec.min_component_px) keep[label[i]] = 1;
    }
    Mask region(w, h);
    for (std::size_t i = 0; i < label.size(); ++i)
        if (label[i] >= 0 && keep[label[i]]) region.values()[i] = Mask::kHole;
    res.mask = dilate(region, spec.dilation_px);
    return res;
}

// ---------------------------------------------------------------------------
// Random large masks

enum class MaskClass { pure_inpaint, contains_outpaint };

inline std::string to_string(MaskClass c) {
    return c == MaskClass::pure_inpaint ? "pure_inpaint" : "contains_outpaint";
}

/// A hole touching the image border forces the filler to extrapolate.
inline MaskClass classify(const Mask& mask) {
    const int w = mask.width(), h = mask.height();
    for (int x = 0; x < w; ++x)
        if (mask.hole(x, 0) || mask.hole(x, h - 1)) return MaskClass::contains_outpaint;
    for (int y = 0; y < h; ++y)
        if (mask.hole(0, y) || mask.hole(w - 1, y)) return MaskClass::contains_outpaint;
    return MaskClass::pure_inpaint;
}

struct MaskSpec {
    std::uint64_t seed = 0;
    double coverage_min = 0.15;
    double coverage_max = 0.45;
    // Relative weights for rectangle, ellipse, thick stroke.
    std::array<double, 3> shape_mix{1.0, 1.0, 1.0};
    bool allow_border_contact = true;

    void validate() const {
        if (!(coverage_min > 0.0 && coverage_min <= coverage_max && coverage_max < 0.9)) {
            throw ConfigError("coverage range must satisfy 0 < min <= max < 0.9");
        }
        double total = 0.0;
        for (double wgt : shape_mix) {
            if (!(wgt >= 0.0) || !std::isfinite(wgt)) throw ConfigError("shape weights must be >= 0");
            total += wgt;
        }
        if (total <= 0.0) throw ConfigError("shape weights must not all be zero");
    }
};

namespace detail {

struct MaskRng {
    std::mt19937_64 eng;
    explicit MaskRng(std::uint64_t seed) : eng(seed) {}
    // Portable uniform in [0, 1); std::uniform_real_distribution is implementation-defined.
    double uniform() { return double(eng() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

inline double seg_dist2(double px, double py, double ax, double ay, double bx, double by) {
    const double vx = bx - ax, vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
    return dx * dx + dy * dy;
}

}  // namespace detail

/// Seeded mix of rectangles, rotated ellipses and thick polyline strokes whose
/// total hole coverage lands inside [coverage_min, coverage_max].
inline Mask random_mask(const MaskSpec& spec, int width, int height) {
    spec.validate();
    Mask mask(width, height);
    detail::MaskRng rng(spec.seed);
    const double target = rng.uniform(spec.coverage_min, spec.coverage_max);
    const double total_px = double(width) * height;
    const double size = std::min(width, height);
    const int lo_x = spec.allow_border_contact ? 0 : 1, hi_x = spec.allow_border_contact ? width - 1 : width - 2;
    const int lo_y = spec.allow_border_contact ? 0 : 1, hi_y = spec.allow_border_contact ? height - 1 : height - 2;
    if (hi_x < lo_x || hi_y < lo_y) throw ConfigError("mask too small for the border constraint");

    const double wsum = spec.shape_mix[0] + spec.shape_mix[1] + spec.shape_mix[2];
    std::size_t holes = 0;
    std::vector<int> fresh;

    for (int attempt = 0; attempt < 1000; ++attempt) {
        if (double(holes) / total_px >= target) return mask;

        const double pick = rng.uniform() * wsum;
        const int kind = pick < spec.shape_mix[0] ? 0 : (pick < spec.shape_mix[0] + spec.shape_mix[1] ? 1 : 2);
        const double cx = rng.uniform(0.0, width), cy = rng.uniform(0.0, height);

        // Inside test plus a bounding box for the candidate shape.
        double bx0, by0, bx1, by1;
        std::vector<std::array<double, 2>> poly;
        double a = 0, b = 0, ca = 1, sa = 0, thick2 = 0;
        if (kind == 0) {
            a = rng.uniform(0.05, 0.25) * size;  // half extents
            b = rng.uniform(0.05, 0.25) * size;
            bx0 = cx - a; bx1 = cx + a; by0 = cy - b; by1 = cy + b;
        } else if (kind == 1) {
            a = rng.uniform(0.05, 0.25) * size;
            b = rng.uniform(0.05, 0.25) * size;
            const double th = rng.uniform(0.0, std::numbers::pi);
            ca = std::cos(th);
            sa = std::sin(th);
            const double r = std::max(a, b);
            bx0 = cx - r; bx1 = cx + r; by0 = cy - r; by1 = cy + r;
        } else {
            const double thick = rng.uniform(0.02, 0.08) * size;
            thick2 = thick * thick;
            const int verts = 3 + int(rng.uniform() * 6.0);
            double px = cx, py = cy;
            poly.push_back({px, py});
            bx0 = bx1 = px; by0 = by1 = py;
            for (int v = 1; v < verts; ++v) {
                const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
                const double len = rng.uniform(0.05, 0.3) * size;
                px += len * std::cos(ang);
                py += len * std::sin(ang);
                poly.push_back({px, py});
                bx0 = std::min(bx0, px); bx1 = std::max(bx1, px);
                by0 = std::min(by0, py); by1 = std::max(by1, py);
            }
            bx0 -= thick; bx1 += thick; by0 -= thick; by1 += thick;
        }

        const int x0 = std::max(lo_x, int(std::floor(bx0))), x1 = std::min(hi_x, int(std::ceil(bx1)));
        const int y0 = std::max(lo_y, int(std::floor(by0))), y1 = std::min(hi_y, int(std::ceil(by1)));
        fresh.clear();
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (mask.hole(x, y)) continue;
                const double px = x + 0.5 - cx, py = y + 0.5 - cy;
                bool inside = false;
                if (kind == 0) {
                    inside = std::abs(px) <= a && std::abs(py) <= b;
                } else if (kind == 1) {
                    const double u = (ca * px + sa * py) / a, v = (-sa * px + ca * py) / b;
                    inside = u * u + v * v <= 1.0;
                } else {
                    for (std::size_t s = 0; s + 1 < poly.size() && !inside; ++s) {
                        inside = detail::seg_dist2(x + 0.5, y + 0.5, poly[s][0], poly[s][1],
                                                   poly[s + 1][0], poly[s + 1][1]) <= thick2;
                    }
                }
                if (inside) fresh.push_back(y * width + x);
            }
        }
        if (fresh.empty()) continue;
        if (double(holes + fresh.size()) / total_px > spec.coverage_max) continue;
        for (int p : fresh) mask.values()[p] = Mask::kHole;
        holes += fresh.size();
    }
    if (double(holes) / total_px >= target) return mask;
    throw ConfigError("random_mask: could not reach the requested coverage within 1000 attempts");
}

}  // namespace droste
