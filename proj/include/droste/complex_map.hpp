#pragma once

// Complex exponential maps behind Droste-warped pictures.
//
// Two planes are involved. The warped plane holds the twisted artwork; the
// straight plane holds an ordinary picture that repeats itself at scale
// `period`. With u = Ln z taken on the warped plane, the straight point is
// exp(alpha * u). Walking once around the warped centre (u -> u + 2*pi*i)
// multiplies the straight point by `period`, which is what lets the straight
// picture be cut into `branch_count` zoom levels of ratio zoom_step.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "droste/error.hpp"

namespace droste {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kTwoPiI{0.0, kTwoPi};

inline bool is_finite(Complex z) noexcept {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

/// alpha = (2*pi*i + ln P) / (2*pi*i) = 1 - i * ln(P) / (2*pi).
inline Complex compute_alpha(double period) {
    if (!std::isfinite(period) || period <= 1.0) {
        throw DomainError("period must be finite and > 1, got " + std::to_string(period));
    }
    return {1.0, -std::log(period) / kTwoPi};
}

struct BranchIndex {
    int k = 0;
};

struct DrosteParams {
    double period = 256.0;
    Complex center{0.0, 0.0};   // source pixel coordinates
    double base_radius = 2.0;   // pixels; inner radius of the annulus
    int branch_count = 8;
    double cut_angle = 0.0;     // radians; seam of Ln sits at cut_angle + pi

    // Derived by make(); never set by hand.
    Complex alpha{1.0, 0.0};
    double zoom_step = 2.0;

    static DrosteParams make(double period, Complex center, double base_radius,
                             int branch_count = 8, double cut_angle = 0.0) {
        DrosteParams p;
        p.period = period;
        p.center = center;
        p.base_radius = base_radius;
        p.branch_count = branch_count;
        p.cut_angle = cut_angle;
        p.derive();
        return p;
    }

    /// Recompute alpha and zoom_step; idempotent.
    void derive() {
        if (!(base_radius > 0.0) || !std::isfinite(base_radius)) {
            throw ConfigError("base_radius must be > 0");
        }
        if (branch_count < 1) throw ConfigError("branch_count must be >= 1");
        if (!is_finite(center)) throw ConfigError("center must be finite");
        if (!std::isfinite(cut_angle)) throw ConfigError("cut_angle must be finite");
        alpha = compute_alpha(period);
        zoom_step = std::pow(period, 1.0 / branch_count);
    }

    double log_zoom_step() const noexcept { return std::log(period) / branch_count; }
};

/// Logarithm with its branch cut along the ray at angle cut_angle + pi.
inline Complex log_cut(Complex z, double cut_angle = 0.0) {
    if (!is_finite(z) || z == Complex{0.0, 0.0}) {
        throw DomainError("logarithm of zero or non-finite value");
    }
    const Complex rot = std::polar(1.0, -cut_angle);
    const Complex l = std::log(z * rot);
    return {l.real(), l.imag() + cut_angle};
}

inline Complex checked(Complex v, const char* what) {
    if (!is_finite(v)) throw DomainError(std::string(what) + " produced a non-finite value");
    return v;
}

/// exp(alpha * u) for a log-plane coordinate u = Ln z of the warped plane.
inline Complex forward_map(Complex u, const DrosteParams& params) {
    if (!is_finite(u)) throw DomainError("forward_map: non-finite input");
    return checked(std::exp(params.alpha * u), "forward_map");
}

/// exp(alpha * Ln z) evaluated directly on a plane point (principal sheet w.r.t. cut_angle).
inline Complex forward_point(Complex z, const DrosteParams& params) {
    return forward_map(log_cut(z, params.cut_angle), params);
}

/// Preimage on sheet n: exp((Ln z + 2*pi*i*n) / alpha). Any integer n is accepted.
inline Complex inverse_sheet(Complex z, int n, Complex alpha, double cut_angle = 0.0) {
    const Complex l = log_cut(z, cut_angle);
    return checked(std::exp((l + kTwoPiI * static_cast<double>(n)) / alpha), "inverse_map");
}

inline Complex inverse_map(Complex z, BranchIndex branch, const DrosteParams& params) {
    if (branch.k < 0 || branch.k >= params.branch_count) {
        throw DomainError("branch index " + std::to_string(branch.k) + " outside [0, " +
                          std::to_string(params.branch_count) + ")");
    }
    return inverse_sheet(z, branch.k, params.alpha, params.cut_angle);
}

struct SelfSimilarity {
    double scale = 1.0;      // |exp(-2*pi*i/alpha)|: the copy inside is this much smaller
    double angle_deg = 0.0;  // arg(exp(-2*pi*i/alpha)) in [0, 360)
    Complex factor{1.0, 0.0};  // exp(2*pi*i/alpha), maps the picture onto its inner copy
};

inline SelfSimilarity self_similarity(Complex alpha) {
    if (!is_finite(alpha) || alpha == Complex{0.0, 0.0}) {
        throw DomainError("alpha must be finite and nonzero");
    }
    const Complex e = kTwoPiI / alpha;
    SelfSimilarity s;
    s.factor = checked(std::exp(e), "self_similarity");
    s.scale = std::exp(-e.real());
    double deg = std::fmod(-e.imag() * 180.0 / std::numbers::pi, 360.0);
    if (deg < 0.0) deg += 360.0;
    // fmod can return 360 - tiny for values like -0.0; fold back onto [0, 360).
    if (deg >= 360.0 - 1e-12) deg = 0.0;
    s.angle_deg = deg;
    return s;
}

inline SelfSimilarity self_similarity(const DrosteParams& params) {
    return self_similarity(params.alpha);
}

}  // namespace droste
