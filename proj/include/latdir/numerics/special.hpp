#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace latdir {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal cumulative distribution function.
inline double std_normal_cdf(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("std_normal_cdf: non-finite input");
    return 0.5 * std::erfc(-x / kSqrt2);
}

/// Standard normal density.
inline double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Inverse standard normal CDF via bisection + Newton polish. Used for tests
/// and sampling helpers, not in hot loops.
inline double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("std_normal_quantile: p outside (0,1)");
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std_normal_cdf(mid) < p ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        const double d = std_normal_pdf(x);
        if (d < 1e-300) break;
        x -= (std_normal_cdf(x) - p) / d;
    }
    return x;
}

inline double logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// d/dx logistic(x) = logistic(x) * (1 - logistic(x)), computed stably.
inline double logistic_deriv(double x) {
    const double s = logistic(std::abs(x));
    return s * (1.0 - s);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    if (x > 36.0) return x;
    if (x < -36.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

} // namespace latdir
