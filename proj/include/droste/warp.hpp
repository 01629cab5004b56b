#pragma once

// Raster side of the Droste maps.
//
// A StraightSet holds `branch_count` square Euclidean views of the straight
// plane. View k shows the straight plane zoomed in by zoom_step^k around its
// origin, over the window [-(1 + margin), 1 + margin]^2 in view units. The
// ring 1/zoom_step < |q| <= 1 is the part a view "owns"; the margin overlaps
// with the next coarser view so that fills and seam blends have context.
//
// Levels j beyond [0, branch_count) fold back onto view j mod branch_count
// because the straight picture repeats at scale `period` = zoom_step^branch_count.

#include <cmath>
#include <optional>
#include <vector>

#include "droste/complex_map.hpp"
#include "droste/masking.hpp"
#include "droste/raster.hpp"
#include "droste/sampling.hpp"

namespace droste {

struct StraightSet {
    std::vector<RasterImage> images;  // view order k = 0 .. N-1
    std::vector<Mask> blank_masks;
    DrosteParams params;
    SamplerSpec sampler;
    int out_size = 0;         // pixels per view side
    double margin = 0.1;      // overlap beyond the owned ring, fraction of the unit window
    int source_width = 0;     // warped-plane geometry the set was cut from
    int source_height = 0;

    /// Pixels per unit straight-plane length in view 0.
    double out_resolution() const { return out_size / (2.0 * (1.0 + margin)); }

    void validate() const {
        if (images.empty()) throw ConfigError("straight set is empty");
        if (int(images.size()) != params.branch_count) {
            throw ConfigError("straight set has " + std::to_string(images.size()) +
                              " images but branch_count is " + std::to_string(params.branch_count));
        }
        if (blank_masks.size() != images.size()) throw ConfigError("one blank mask per image required");
        for (std::size_t k = 0; k < images.size(); ++k) {
            if (images[k].width() != out_size || images[k].height() != out_size) {
                throw ConfigError("straight image " + std::to_string(k) + " has wrong dimensions");
            }
            if (blank_masks[k].width() != out_size || blank_masks[k].height() != out_size) {
                throw ConfigError("blank mask " + std::to_string(k) + " has wrong dimensions");
            }
        }
        if (source_width < 1 || source_height < 1) throw ConfigError("straight set lacks source size");
    }
};

struct UnrollOptions {
    int out_size = 512;
    double margin = 0.1;
    BlankSpec blank{};
};

struct RewarpOptions {
    int out_width = 0;   // 0: same as the source the set was cut from
    int out_height = 0;
    double seam_band_px = 16.0;
};

namespace detail {

inline int floor_mod(int a, int n) {
    const int r = a % n;
    return r < 0 ? r + n : r;
}

/// View-k pixel position -> straight-plane point.
inline Complex view_to_straight(double px, double py, int k, int n, double margin, double log_s) {
    const double e = (1.0 + margin) * std::exp(-k * log_s);
    return {(px / n * 2.0 - 1.0) * e, (py / n * 2.0 - 1.0) * e};
}

/// Straight-plane point -> pixel position in view `level` (unfolded level).
inline std::array<double, 2> straight_to_view(Complex zeta, int level, int n, double margin,
                                              double log_s) {
    const Complex q = zeta * std::exp(level * log_s) / (1.0 + margin);
    return {(q.real() + 1.0) * 0.5 * n, (q.imag() + 1.0) * 0.5 * n};
}

/// Largest radius (pixels) at which unroll takes its source samples.
inline double unroll_max_radius(const DrosteParams& p, int width, int height) {
    const double cx = p.center.real(), cy = p.center.imag();
    const double inscribed = std::min({cx, cy, width - cx, height - cy});
    return std::min(inscribed, p.base_radius * p.period);
}

}  // namespace detail

/// Copies of one straight point: the warped preimages differ by the factor
/// exp(2*pi*i/alpha). Unroll reads the largest copy that still lies inside
/// the source's inscribed disk, which is also the finest sampled one.
inline std::optional<Complex> unroll_source_point(Complex zeta, const DrosteParams& p,
                                                  double max_radius_px) {
    if (zeta == Complex{0.0, 0.0}) return p.center;
    const Complex w0 = log_cut(zeta, 0.0) / p.alpha;  // log of the sheet-0 preimage, base units
    const Complex step = kTwoPiI / p.alpha;            // sheet increment
    const double shrink = -step.real();                // ln of the copy ratio, > 0
    const double limit = std::log(max_radius_px / p.base_radius);
    if (!(shrink > 0.0)) return std::nullopt;
    const double n = std::ceil((w0.real() - limit) / shrink);
    const Complex w = w0 + step * n;
    const Complex z = std::exp(w) * p.base_radius + p.center;
    if (!is_finite(z)) return std::nullopt;
    return z;
}

inline void check_unroll_inputs(const RasterImage& source, const DrosteParams& p, int out_size) {
    const double cx = p.center.real(), cy = p.center.imag();
    if (!(cx > 0 && cy > 0 && cx < source.width() && cy < source.height())) {
        throw ConfigError("center lies outside the source image");
    }
    if (p.base_radius < 1.0) {
        throw ConfigError("base_radius covers less than one source pixel");
    }
    if (out_size < 64) throw ConfigError("straight image size must be >= 64");
    if (detail::unroll_max_radius(p, source.width(), source.height()) <= p.base_radius) {
        throw ConfigError("source disk around the center is smaller than base_radius");
    }
}

/// Unrolls a warped source into `branch_count` straight views, each with its blank mask.
inline StraightSet unroll(const RasterImage& source, const DrosteParams& params,
                          const SamplerSpec& sampler, const UnrollOptions& opt = {}) {
    sampler.validate();
    check_unroll_inputs(source, params, opt.out_size);
    const int n = opt.out_size;
    const int N = params.branch_count;
    const double log_s = params.log_zoom_step();
    const double rmax = detail::unroll_max_radius(params, source.width(), source.height());

    StraightSet set;
    set.params = params;
    set.sampler = sampler;
    set.out_size = n;
    set.margin = opt.margin;
    set.source_width = source.width();
    set.source_height = source.height();

    for (int k = 0; k < N; ++k) {
        RasterImage view = resample(source, n, n, sampler,
                                    [&](double x, double y) -> std::optional<std::array<double, 2>> {
                                        const Complex zeta =
                                            detail::view_to_straight(x, y, k, n, opt.margin, log_s);
                                        auto z = unroll_source_point(zeta, params, rmax);
                                        if (!z) return std::nullopt;
                                        return std::array<double, 2>{z->real(), z->imag()};
                                    });
        set.blank_masks.push_back(extract_blank(view, opt.blank).mask);
        set.images.push_back(std::move(view));
    }
    return set;
}

/// Which views a warped-plane output position reads from.
struct LodChoice {
    bool inside = false;      // within the annulus [base_radius, base_radius * period]
    Complex zeta{};           // straight-plane point
    int primary = 0;          // unfolded level
    std::optional<int> partner;
    double partner_weight = 0.0;
};

/// Output geometry for rewarp: the source geometry scaled to the output width.
struct WarpGeometry {
    Complex center;
    double base_radius;

    static WarpGeometry for_output(const StraightSet& set, int out_width) {
        const double scale = double(out_width) / set.source_width;
        return {set.params.center * scale, set.params.base_radius * scale};
    }
};

/// Level-of-detail rule: pick the level whose straight pixels match the output
/// pixel footprint most closely (never reading past the owned ring) and blend
/// linearly with the adjacent level inside a band around each level switch.
inline LodChoice rewarp_lod(double x, double y, const StraightSet& set, const WarpGeometry& g,
                            double seam_band_px) {
    LodChoice c;
    const DrosteParams& p = set.params;
    const Complex zr = (Complex{x, y} - g.center) / g.base_radius;
    const double rho = std::abs(zr);
    if (!(rho >= 1.0 && rho <= p.period)) return c;
    c.inside = true;
    c.zeta = forward_point(zr, p);
    const double log_s = p.log_zoom_step();
    const double rho_px = rho * g.base_radius;
    const double abs_alpha = std::abs(p.alpha);

    const double lambda_fine = -std::log(std::abs(c.zeta)) / log_s;
    const double t_star = 2.0 * (1.0 + set.margin) * rho_px / (abs_alpha * set.out_size);
    const double lambda = lambda_fine + std::min(0.0, std::log(t_star) / log_s);
    const double j0 = std::floor(lambda);
    const double frac = lambda - j0;
    c.primary = static_cast<int>(j0);

    const double max_half = std::log(1.0 + set.margin) / log_s;
    double half = 0.5 * seam_band_px * abs_alpha / (rho_px * log_s);
    half = std::min({half, max_half, 0.5});
    if (half <= 0.0) return c;
    if (frac < 0.5 && frac < half) {
        c.partner = c.primary - 1;
        c.partner_weight = 0.5 * (1.0 - frac / half);
    } else if (frac >= 0.5 && 1.0 - frac < half) {
        c.partner = c.primary + 1;
        c.partner_weight = 0.5 * (1.0 - (1.0 - frac) / half);
    }
    return c;
}

inline std::optional<Color> sample_level(const StraightSet& set, Complex zeta, int level,
                                        Interpolation mode) {
    const int N = set.params.branch_count;
    const auto pos = detail::straight_to_view(zeta, level, set.out_size, set.margin,
                                              set.params.log_zoom_step());
    return sample(set.images[detail::floor_mod(level, N)], pos[0], pos[1], mode);
}

/// Recombines a straight set into the warped composite over the annulus.
inline RasterImage rewarp(const StraightSet& set, const SamplerSpec& sampler,
                          const RewarpOptions& opt = {}) {
    set.validate();
    sampler.validate();
    const int W = opt.out_width > 0 ? opt.out_width : set.source_width;
    int H = opt.out_height;
    if (H <= 0) H = int(std::lround(double(set.source_height) * W / set.source_width));
    const WarpGeometry g = WarpGeometry::for_output(set, W);
    RasterImage out(W, H);
    const int ss = sampler.supersampling;
    const double inv = 1.0 / (ss * ss);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            Color acc;
            bool ok = true;
            for (int sy = 0; sy < ss && ok; ++sy) {
                for (int sx = 0; sx < ss && ok; ++sx) {
                    const LodChoice c = rewarp_lod(x + (sx + 0.5) / ss, y + (sy + 0.5) / ss, set, g,
                                                   opt.seam_band_px);
                    if (!c.inside) {
                        ok = false;
                        break;
                    }
                    auto prim = sample_level(set, c.zeta, c.primary, sampler.interpolation);
                    if (!prim) {
                        ok = false;
                        break;
                    }
                    Color col = *prim;
                    if (c.partner && c.partner_weight > 0.0) {
                        if (auto part = sample_level(set, c.zeta, *c.partner, sampler.interpolation)) {
                            col = (1.0 - c.partner_weight) * col + c.partner_weight * (*part);
                        }
                    }
                    acc += col;
                }
            }
            if (ok) out.at(x, y) = to_rgba(inv * acc);
        }
    }
    return out;
}

/// Unroll then rewarp; PSNR over pixels opaque in both source and result.
inline double roundtrip_psnr(const RasterImage& source, const DrosteParams& params,
                             const SamplerSpec& sampler, int straight_size = 0,
                             const Mask* region = nullptr) {
    UnrollOptions uo;
    uo.out_size = straight_size > 0 ? straight_size : std::max(source.width(), source.height());
    const StraightSet set = unroll(source, params, sampler, uo);
    const RasterImage back = rewarp(set, sampler);
    return psnr(source, back, region);
}

}  // namespace droste
