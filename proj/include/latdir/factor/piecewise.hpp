#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "latdir/numerics/vec.hpp"

namespace latdir {

/// Monotone (non-decreasing) piecewise-linear function on a fixed knot grid,
/// anchored so that g(0) = 0 exactly; 0 must be one of the knots. Beyond the
/// end knots the boundary segments extend linearly.
struct PiecewiseLinearFn {
    Vec knots;  // strictly increasing, contains 0
    Vec values; // non-decreasing, value at the 0-knot is exactly 0

    std::size_t segments() const { return knots.size() - 1; }
    double min_knot() const { return knots.front(); }
    double max_knot() const { return knots.back(); }

    /// Index of the segment whose slope governs point s (clamped at the ends).
    std::size_t segment_of(double s) const {
        if (s <= knots.front()) return 0;
        if (s >= knots.back()) return knots.size() - 2;
        const auto it = std::upper_bound(knots.begin(), knots.end(), s);
        return static_cast<std::size_t>(it - knots.begin()) - 1;
    }

    double slope_of_segment(std::size_t i) const {
        return (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
    }

    double operator()(double s) const {
        const std::size_t i = segment_of(s);
        return values[i] + (s - knots[i]) * slope_of_segment(i);
    }

    double slope_at(double s) const { return slope_of_segment(segment_of(s)); }

    /// Leftmost s with g(s) = t. Requires t to be reachable: inside the value
    /// range, or beyond it with a nonzero boundary slope.
    double inverse(double t) const {
        if (t < values.front()) {
            const double s0 = slope_of_segment(0);
            if (s0 <= 0.0) throw std::domain_error("PiecewiseLinearFn::inverse: t below range");
            return knots.front() + (t - values.front()) / s0;
        }
        if (t > values.back()) {
            const double sk = slope_of_segment(segments() - 1);
            if (sk <= 0.0) throw std::domain_error("PiecewiseLinearFn::inverse: t above range");
            return knots.back() + (t - values.back()) / sk;
        }
        // leftmost knot index with values[i] <= t <= values[i+1]
        const auto it = std::lower_bound(values.begin(), values.end(), t);
        std::size_t i = static_cast<std::size_t>(it - values.begin());
        if (i > 0) --i;
        while (i + 1 < values.size() && values[i + 1] < t) ++i;
        const double dv = values[i + 1] - values[i];
        if (dv <= 0.0) return knots[i]; // flat run: leftmost point of the plateau
        return knots[i] + (t - values[i]) * (knots[i + 1] - knots[i]) / dv;
    }
};

/// Uniform symmetric grid; count must be odd and >= 3 so 0 is a knot.
inline Vec uniform_knots(std::size_t count, double lo = -3.0, double hi = 3.0) {
    if (count < 3 || count % 2 == 0)
        throw std::invalid_argument("uniform_knots: knot count must be odd and >= 3");
    if (!(lo < 0.0 && hi > 0.0 && lo == -hi))
        throw std::invalid_argument("uniform_knots: grid must be symmetric about 0");
    Vec k(count);
    const std::size_t mid = count / 2;
    const double step = hi / static_cast<double>(mid);
    for (std::size_t i = 0; i < count; ++i)
        k[i] = (static_cast<double>(i) - static_cast<double>(mid)) * step;
    k[mid] = 0.0;
    return k;
}

/// Validates monotonicity and re-anchors so the 0-knot value is exactly 0.
inline PiecewiseLinearFn make_piecewise_linear(Vec knots, Vec values) {
    if (knots.size() < 2 || knots.size() != values.size())
        throw std::invalid_argument("make_piecewise_linear: bad knot/value sizes");
    std::size_t zero_idx = knots.size();
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (i > 0 && !(knots[i] > knots[i - 1]))
            throw std::invalid_argument("make_piecewise_linear: knots must increase strictly");
        if (i > 0 && values[i] < values[i - 1])
            throw std::invalid_argument("make_piecewise_linear: values must be non-decreasing");
        if (knots[i] == 0.0) zero_idx = i;
    }
    if (zero_idx == knots.size())
        throw std::invalid_argument("make_piecewise_linear: knot grid must contain 0");
    const double anchor = values[zero_idx];
    for (double& v : values) v -= anchor;
    values[zero_idx] = 0.0;
    PiecewiseLinearFn f;
    f.knots = std::move(knots);
    f.values = std::move(values);
    return f;
}

/// Samples a monotone scalar function onto a knot grid.
template <typename F>
PiecewiseLinearFn sample_piecewise_linear(const Vec& knots, F&& fn) {
    Vec values(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) values[i] = fn(knots[i]);
    return make_piecewise_linear(knots, std::move(values));
}

} // namespace latdir
