#pragma once

// No-reference quality metrics: BRISQUE (MSCN statistics + RBF-SVR) and the
// DOM edge-sharpness score. Both run on BT.601 luma, 0..255 scale.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "droste/raster.hpp"

namespace droste {

namespace detail {

inline int reflect_index(int i, int n) {
    // Half-sample symmetric: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

inline std::vector<double> gaussian_kernel_1d(int size, double sigma) {
    std::vector<double> k(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

inline Plane separable_filter(const Plane& src, const std::vector<double>& k) {
    const int w = src.width, h = src.height, half = int(k.size()) / 2;
    Plane tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = 0; i < int(k.size()); ++i) s += k[i] * src(reflect_index(x + i - half, w), y);
            tmp(x, y) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = 0; i < int(k.size()); ++i) s += k[i] * tmp(x, reflect_index(y + i - half, h));
            out(x, y) = s;
        }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MSCN and distribution fits

inline Plane mscn(const Plane& gray) {
    if (gray.width < 7 || gray.height < 7) throw ConfigError("mscn: image smaller than 7x7");
    const auto k = detail::gaussian_kernel_1d(7, 7.0 / 6.0);
    const Plane mu = detail::separable_filter(gray, k);
    Plane sq(gray.width, gray.height);
    for (std::size_t i = 0; i < sq.v.size(); ++i) sq.v[i] = gray.v[i] * gray.v[i];
    const Plane mu2 = detail::separable_filter(sq, k);
    Plane out(gray.width, gray.height);
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        const double var = std::max(0.0, mu2.v[i] - mu.v[i] * mu.v[i]);
        out.v[i] = (gray.v[i] - mu.v[i]) / (std::sqrt(var) + 1.0);
    }
    return out;
}

inline Plane mscn(const RasterImage& img) { return mscn(to_gray(img)); }

struct GgdFit {
    double shape = 0, sigma = 0;
};

struct AggdFit {
    double shape = 0, sigma_left = 0, sigma_right = 0, mean_offset = 0;
};

namespace detail {

inline constexpr double kShapeMin = 0.2, kShapeMax = 10.0, kShapeStep = 1e-3;

struct ShapeTable {
    std::vector<double> shape, ggd_ratio, aggd_ratio;

    ShapeTable() {
        const int n = int(std::lround((kShapeMax - kShapeMin) / kShapeStep)) + 1;
        for (int i = 0; i < n; ++i) {
            const double g = kShapeMin + i * kShapeStep;
            const double l1 = std::lgamma(1.0 / g), l2 = std::lgamma(2.0 / g), l3 = std::lgamma(3.0 / g);
            shape.push_back(g);
            ggd_ratio.push_back(std::exp(l1 + l3 - 2.0 * l2));   // E[x^2] / E[|x|]^2
            aggd_ratio.push_back(std::exp(2.0 * l2 - l1 - l3));  // E[|x|]^2 / E[x^2]
        }
    }

    static const ShapeTable& get() {
        static const ShapeTable t;
        return t;
    }
};

inline double nearest_shape(const std::vector<double>& ratios, double target) {
    const auto& t = ShapeTable::get();
    std::size_t best = 0;
    double best_d = std::abs(ratios[0] - target);
    for (std::size_t i = 1; i < ratios.size(); ++i) {
        const double d = std::abs(ratios[i] - target);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return t.shape[best];
}

inline void check_samples(const std::vector<double>& x, const char* what) {
    if (x.size() < 100) throw ConfigError(std::string(what) + ": need at least 100 samples");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) throw ConfigError(std::string(what) + ": degenerate samples (all equal)");
}

}  // namespace detail

inline GgdFit fit_ggd(const std::vector<double>& x) {
    detail::check_samples(x, "fit_ggd");
    double s2 = 0.0, s1 = 0.0;
    for (double v : x) {
        s2 += v * v;
        s1 += std::abs(v);
    }
    const double n = double(x.size());
    const double var = s2 / n, mabs = s1 / n;
    const double rho = var / (mabs * mabs);
    return {detail::nearest_shape(detail::ShapeTable::get().ggd_ratio, rho), std::sqrt(var)};
}

inline AggdFit fit_aggd(const std::vector<double>& x) {
    detail::check_samples(x, "fit_aggd");
    double l2 = 0.0, r2 = 0.0, s1 = 0.0, s2 = 0.0;
    std::size_t nl = 0, nr = 0;
    for (double v : x) {
        if (v < 0) {
            l2 += v * v;
            ++nl;
        } else {
            r2 += v * v;
            ++nr;
        }
        s1 += std::abs(v);
        s2 += v * v;
    }
    const double n = double(x.size());
    const double sl = nl ? std::sqrt(l2 / nl) : 0.0;
    const double sr = nr ? std::sqrt(r2 / nr) : 0.0;
    AggdFit f;
    f.sigma_left = sl;
    f.sigma_right = sr;
    if (sl == 0.0 || sr == 0.0) {
        // One-sided samples: the asymmetry estimate degenerates; fall back to the symmetric ratio.
        const double rhat = (s1 / n) * (s1 / n) / (s2 / n);
        f.shape = detail::nearest_shape(detail::ShapeTable::get().aggd_ratio, rhat);
    } else {
        const double g = sl / sr;
        const double rhat = (s1 / n) * (s1 / n) / (s2 / n);
        const double rnorm = rhat * (g * g * g + 1.0) * (g + 1.0) / ((g * g + 1.0) * (g * g + 1.0));
        f.shape = detail::nearest_shape(detail::ShapeTable::get().aggd_ratio, rnorm);
    }
    const double a = f.shape;
    const double ratio = std::exp(std::lgamma(2.0 / a) - std::lgamma(1.0 / a));
    const double scale = std::exp(0.5 * (std::lgamma(1.0 / a) - std::lgamma(3.0 / a)));
    f.mean_offset = (sr - sl) * ratio * scale;
    return f;
}

// ---------------------------------------------------------------------------
// BRISQUE

using FeatureVector36 = std::array<double, 36>;

namespace detail {

/// 18 features of one scale: [shape, sigma^2] of the MSCN field, then
/// [shape, mean, sigma_l^2, sigma_r^2] for the H, V, D1, D2 neighbour products.
inline void scale_features(const Plane& gray, double* out) {
    const Plane m = mscn(gray);
    const GgdFit g = fit_ggd(m.v);
    out[0] = g.shape;
    out[1] = g.sigma * g.sigma;
    const int w = m.width, h = m.height;
    const std::array<std::array<int, 4>, 4> shifts = {{
        {0, 0, 1, 0},  // horizontal: (x, y) * (x + 1, y)
        {0, 0, 0, 1},  // vertical
        {0, 0, 1, 1},  // main diagonal
        {1, 0, 0, 1},  // secondary diagonal: (x + 1, y) * (x, y + 1)
    }};
    std::vector<double> prod;
    for (int s = 0; s < 4; ++s) {
        const auto [ax, ay, bx, by] = shifts[s];
        prod.clear();
        const int dx = std::max(ax, bx), dy = std::max(ay, by);
        for (int y = 0; y + dy < h; ++y)
            for (int x = 0; x + dx < w; ++x) prod.push_back(m(x + ax, y + ay) * m(x + bx, y + by));
        const AggdFit a = fit_aggd(prod);
        out[2 + 4 * s + 0] = a.shape;
        out[2 + 4 * s + 1] = a.mean_offset;
        out[2 + 4 * s + 2] = a.sigma_left * a.sigma_left;
        out[2 + 4 * s + 3] = a.sigma_right * a.sigma_right;
    }
}

inline Plane downsample2(const Plane& g) {
    Plane out(g.width / 2, g.height / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out(x, y) = 0.25 * (g(2 * x, 2 * y) + g(2 * x + 1, 2 * y) + g(2 * x, 2 * y + 1) +
                                g(2 * x + 1, 2 * y + 1));
    return out;
}

}  // namespace detail

inline FeatureVector36 brisque_features(const Plane& gray) {
    if (gray.width < 14 || gray.height < 14) throw ConfigError("brisque: image smaller than 14x14");
    FeatureVector36 f{};
    detail::scale_features(gray, f.data());
    detail::scale_features(detail::downsample2(gray), f.data() + 18);
    return f;
}

inline FeatureVector36 brisque_features(const RasterImage& img) { return brisque_features(to_gray(img)); }

/// RBF epsilon-SVR with per-feature [-1, 1] scaling.
struct SvrModel {
    double gamma = 0.0;
    double rho = 0.0;
    std::array<double, 36> scale_min{}, scale_max{};
    std::vector<double> coef;
    std::vector<FeatureVector36> support;

    static SvrModel parse(std::istream& in, const std::string& origin = "<stream>") {
        SvrModel m;
        std::string line;
        std::optional<std::size_t> n_sv;
        std::array<bool, 36> have_scale{};
        bool have_gamma = false, have_rho = false;
        int lineno = 0;
        auto fail = [&](const std::string& why) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + why);
        };
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            std::istringstream ls(line);
            std::string key;
            ls >> key;
            if (key == "gamma") {
                if (!(ls >> m.gamma)) fail("bad gamma");
                have_gamma = true;
            } else if (key == "rho") {
                if (!(ls >> m.rho)) fail("bad rho");
                have_rho = true;
            } else if (key == "n_sv") {
                std::size_t n = 0;
                if (!(ls >> n)) fail("bad n_sv");
                n_sv = n;
            } else if (key == "scale") {
                int i = -1;
                double lo = 0, hi = 0;
                if (!(ls >> i >> lo >> hi) || i < 0 || i >= 36) fail("bad scale line");
                if (!(lo < hi)) fail("scale range must have min < max");
                m.scale_min[i] = lo;
                m.scale_max[i] = hi;
                have_scale[i] = true;
            } else {
                std::istringstream vs(line);
                double c = 0;
                FeatureVector36 sv{};
                if (!(vs >> c)) fail("unrecognised line");
                for (double& v : sv)
                    if (!(vs >> v)) fail("support vector needs 36 values");
                double extra;
                if (vs >> extra) fail("support vector has more than 36 values");
                m.coef.push_back(c);
                m.support.push_back(sv);
            }
        }
        if (!have_gamma || !have_rho || !n_sv) throw ConfigError(origin + ": missing gamma/rho/n_sv header");
        for (bool b : have_scale)
            if (!b) throw ConfigError(origin + ": missing scale ranges");
        if (m.support.size() != *n_sv) {
            throw ConfigError(origin + ": n_sv says " + std::to_string(*n_sv) + " but file has " +
                              std::to_string(m.support.size()) + " support vectors");
        }
        return m;
    }

    static SvrModel load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("BRISQUE model file not found: " + path.string());
        return parse(in, path.string());
    }

    FeatureVector36 scale(const FeatureVector36& f) const {
        FeatureVector36 s{};
        for (int i = 0; i < 36; ++i)
            s[i] = -1.0 + 2.0 * (f[i] - scale_min[i]) / (scale_max[i] - scale_min[i]);
        return s;
    }

    double predict(const FeatureVector36& features) const {
        const FeatureVector36 x = scale(features);
        double sum = 0.0;
        for (std::size_t j = 0; j < support.size(); ++j) {
            double d2 = 0.0;
            for (int i = 0; i < 36; ++i) {
                const double d = support[j][i] - x[i];
                d2 += d * d;
            }
            sum += coef[j] * std::exp(-gamma * d2);
        }
        return sum - rho;
    }
};

inline std::filesystem::path default_brisque_model_path() {
#ifdef DROSTE_DATA_DIR
    return std::filesystem::path(DROSTE_DATA_DIR) / "brisque_model.txt";
#else
    return "data/brisque_model.txt";
#endif
}

/// Lower is better.
inline double brisque_score(const RasterImage& img, const SvrModel& model) {
    return model.predict(brisque_features(img));
}

// ---------------------------------------------------------------------------
// DOM sharpness

inline Plane median3(const Plane& g) {
    Plane out(g.width, g.height);
    std::array<double, 9> win;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    win[n++] = g(std::clamp(x + dx, 0, g.width - 1), std::clamp(y + dy, 0, g.height - 1));
            std::nth_element(win.begin(), win.begin() + 4, win.end());
            out(x, y) = win[4];
        }
    return out;
}

/// Otsu threshold of non-negative values, 256 bins over [0, max].
inline double otsu_threshold(const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    if (!(mx > 0.0)) return 0.0;
    std::array<double, 256> hist{};
    for (double x : v) hist[std::min(255, int(x / mx * 256.0))] += 1.0;
    const double total = double(v.size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int best_i = 0;
    for (int i = 0; i < 256; ++i) {
        w0 += hist[i];
        sum0 += i * hist[i];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_i = i;
        }
    }
    return (best_i + 1) * mx / 256.0;  // upper edge of the last background bin
}

/// Ratio of lag-2 second differences to first differences over edge pixels
/// (gradient magnitude above Otsu), both axes. Higher is sharper.
inline double dom_score(const Plane& gray) {
    if (gray.width < 16 || gray.height < 16) throw ConfigError("dom_score: image smaller than 16x16");
    const Plane m = median3(gray);
    const int w = m.width, h = m.height;
    std::vector<double> grad;
    grad.reserve(std::size_t(w - 4) * (h - 4));
    for (int y = 2; y < h - 2; ++y)
        for (int x = 2; x < w - 2; ++x) {
            const double gx = 0.5 * (m(x + 1, y) - m(x - 1, y));
            const double gy = 0.5 * (m(x, y + 1) - m(x, y - 1));
            grad.push_back(std::hypot(gx, gy));
        }
    const double thr = otsu_threshold(grad);
    double num = 0.0, den = 0.0;
    std::size_t edges = 0, i = 0;
    for (int y = 2; y < h - 2; ++y)
        for (int x = 2; x < w - 2; ++x, ++i) {
            if (!(grad[i] > thr)) continue;
            ++edges;
            num += std::abs(m(x + 2, y) - 2.0 * m(x, y) + m(x - 2, y)) +
                   std::abs(m(x, y + 2) - 2.0 * m(x, y) + m(x, y - 2));
            den += std::abs(m(x + 1, y) - m(x - 1, y)) + std::abs(m(x, y + 1) - m(x, y - 1));
        }
    if (edges == 0 || den == 0.0) throw UnscorableError("dom_score: no edge pixels");
    return num / den;
}

inline double dom_score(const RasterImage& img) { return dom_score(to_gray(img)); }

}  // namespace droste
