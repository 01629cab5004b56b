#pragma once

// Summary statistics and one-way ANOVA with an F-distribution quantile from
// the regularized incomplete beta function.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "droste/error.hpp"

namespace droste::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw ConfigError("mean of an empty series");
    double s = 0.0;
    for (double v : x) s += v;
    return s / double(x.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double stddev(std::span<const double> x) {
    if (x.size() < 2) throw ConfigError("standard deviation needs at least 2 values");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / double(x.size() - 1));
}

/// Coefficient of variation in percent.
inline double coefficient_of_variation(std::span<const double> x) {
    const double m = mean(x);
    if (m == 0.0) throw DomainError("coefficient of variation undefined for zero mean");
    if (x.size() < 2) return 0.0;
    return 100.0 * stddev(x) / m;
}

namespace detail {

// Continued fraction for I_x(a, b), modified Lentz.
inline double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double f = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        f *= d * c;
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) return f;
    }
    return f;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete_beta: a, b must be > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta: x outside [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                       b * std::log1p(-x);
    const double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::beta_cf(a, b, x) / a;
    return 1.0 - bt * detail::beta_cf(b, a, 1.0 - x) / b;
}

inline double f_cdf(double f, double d1, double d2) {
    if (!(d1 > 0.0 && d2 > 0.0)) throw DomainError("f_cdf: degrees of freedom must be > 0");
    if (f <= 0.0) return 0.0;
    if (std::isinf(f)) return 1.0;
    return incomplete_beta(0.5 * d1, 0.5 * d2, d1 * f / (d1 * f + d2));
}

/// Inverse CDF of F(d1, d2) by bisection on the beta argument, to 1e-10 in p.
inline double f_quantile(double p, double d1, double d2, double tol = 1e-10) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("f_quantile: p must lie in (0, 1)");
    if (!(d1 > 0.0 && d2 > 0.0)) throw DomainError("f_quantile: degrees of freedom must be > 0");
    // Work on x = d1 F / (d1 F + d2) in (0, 1), where I_x is monotone.
    double lo = 0.0, hi = 1.0;
    const double a = 0.5 * d1, b = 0.5 * d2;
    double x = 0.5;
    for (int it = 0; it < 200; ++it) {
        x = 0.5 * (lo + hi);
        const double v = incomplete_beta(a, b, x);
        if (std::abs(v - p) < tol * 1e-3 || hi - lo < 1e-16) break;
        (v < p ? lo : hi) = x;
    }
    return d2 * x / (d1 * (1.0 - x));
}

struct AnovaResult {
    double f = 0.0;
    int df1 = 0, df2 = 0;
    double ms_between = 0.0, ms_within = 0.0;
    double f_crit = 0.0;  // 0.95 quantile
    double p_value = 1.0;
    bool reject = false;  // F > f_crit
};

inline AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ConfigError("anova: need at least 2 groups");
    std::size_t total = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw ConfigError("anova: every group needs at least 2 values");
        for (double v : g) {
            if (!std::isfinite(v)) throw ConfigError("anova: non-finite value");
            grand += v;
        }
        total += g.size();
    }
    grand /= double(total);
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        const double m = mean(g);
        ssb += double(g.size()) * (m - grand) * (m - grand);
        for (double v : g) ssw += (v - m) * (v - m);
    }
    AnovaResult r;
    r.df1 = int(groups.size()) - 1;
    r.df2 = int(total - groups.size());
    if (!(ssw > 0.0)) throw DomainError("anova: zero within-group variance, F undefined");
    r.ms_between = ssb / r.df1;
    r.ms_within = ssw / r.df2;
    r.f = r.ms_between / r.ms_within;
    r.f_crit = f_quantile(0.95, r.df1, r.df2);
    r.p_value = 1.0 - f_cdf(r.f, r.df1, r.df2);
    r.reject = r.f > r.f_crit;
    return r;
}

}  // namespace droste::stats
