#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "latdir/factor/encoding.hpp"
#include "latdir/numerics/special.hpp"

namespace latdir {

/// Density of the factor t = g(<u,z>) under z ~ N(0, I): the standard normal
/// density of the preimage times the inverse-function derivative. Returns 0
/// outside the reachable range and +inf on a zero-slope plateau (the
/// infinite-density flag).
inline double factor_density(const EncodingModel& m, double t) {
    const auto& g = m.g;
    const double lo_slope = g.slope_of_segment(0);
    const double hi_slope = g.slope_of_segment(g.segments() - 1);
    if (t < g.values.front() && lo_slope <= 0.0) return 0.0;
    if (t > g.values.back() && hi_slope <= 0.0) return 0.0;
    const double s = g.inverse(t);
    const double slope = g.slope_at(s);
    if (slope <= 0.0) return std::numeric_limits<double>::infinity();
    return std_normal_pdf(s) / slope;
}

/// Target factor density phi(t) plus the numeric-integration grid used to
/// tabulate the resampling map.
struct TargetDensity {
    std::function<double(double)> density;
    double coord_margin = 5.25;    // tabulation extends this far past the knots
    std::size_t subdivisions = 64; // refinement per knot segment

    static TargetDensity uniform(double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("TargetDensity::uniform: empty support");
        const double h = 1.0 / (hi - lo);
        TargetDensity t;
        t.density = [lo, hi, h](double x) { return (x >= lo && x <= hi) ? h : 0.0; };
        return t;
    }

    /// The model's own induced factor density; resampling to it is an
    /// identity map.
    static TargetDensity self(const EncodingModel& m) {
        TargetDensity t;
        t.density = [m](double x) { return factor_density(m, x); };
        return t;
    }
};

/// Precomputed resampling map along one direction. The two cumulative tables
/// (target mass and standard normal mass) are built by the trapezoid rule on
/// the same knot-refined grid, so resampling to the model's own density
/// cancels to the identity up to rounding rather than quadrature error.
class LatentResampler {
public:
    LatentResampler(EncodingModel model, const TargetDensity& target) : model_(std::move(model)) {
        build_grid(target);
        tabulate(target);
    }

    /// Replace the u-coordinate of z by the target-matched value; the
    /// orthogonal complement is untouched.
    Latent resample(const Latent& z) const {
        if (z.size() != model_.d()) throw std::invalid_argument("resample: dimension mismatch");
        const double c = dot(z, model_.u);
        const double mass = interp(grid_, normal_cum_, c);
        const double c_new = interp_inverse(grid_, target_cum_, mass);
        Latent out = z;
        axpy(c_new - c, model_.u, out);
        return out;
    }

    const EncodingModel& model() const { return model_; }

private:
    void build_grid(const TargetDensity& target) {
        const Vec& knots = model_.g.knots;
        Vec breaks;
        breaks.push_back(knots.front() - target.coord_margin);
        for (double k : knots) breaks.push_back(k);
        breaks.push_back(knots.back() + target.coord_margin);
        grid_.clear();
        for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
            const double lo = breaks[b], hi = breaks[b + 1];
            for (std::size_t i = 0; i < target.subdivisions; ++i)
                grid_.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                         static_cast<double>(target.subdivisions));
        }
        grid_.push_back(breaks.back());
    }

    void tabulate(const TargetDensity& target) {
        const std::size_t n = grid_.size();
        Vec target_f(n), normal_f(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = grid_[i];
            const double phi = target.density(model_.g(t));
            if (!(phi >= 0.0))
                throw std::invalid_argument("LatentResampler: target density must be >= 0");
            target_f[i] = phi * model_.g.slope_at(t);
            normal_f[i] = std_normal_pdf(t);
        }
        target_cum_.assign(n, 0.0);
        normal_cum_.assign(n, 0.0);
        for (std::size_t i = 1; i < n; ++i) {
            const double h = grid_[i] - grid_[i - 1];
            target_cum_[i] = target_cum_[i - 1] + 0.5 * h * (target_f[i] + target_f[i - 1]);
            normal_cum_[i] = normal_cum_[i - 1] + 0.5 * h * (normal_f[i] + normal_f[i - 1]);
        }
        const double total = target_cum_.back();
        if (std::abs(total - 1.0) > 1e-3)
            throw std::invalid_argument(
                "LatentResampler: target density integrates to " + std::to_string(total) +
                " over the reachable range (expected 1 within 1e-3)");
        // a mass plateau strictly inside the support makes the map non-invertible
        std::size_t first = n, last = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (target_cum_[i] > target_cum_[i - 1]) {
                if (first == n) first = i;
                last = i;
            }
        }
        for (std::size_t i = first + 1; i <= last; ++i)
            if (!(target_cum_[i] > target_cum_[i - 1]))
                throw std::invalid_argument(
                    "LatentResampler: target density vanishes on an interior interval; "
                    "the resampling map is not invertible");
        for (double& v : target_cum_) v /= total;
        const double ntotal = normal_cum_.back();
        for (double& v : normal_cum_) v /= ntotal;
    }

    static double interp(const Vec& xs, const Vec& ys, double x) {
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
        const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + w * (ys[i + 1] - ys[i]);
    }

    /// Leftmost x with interp(xs, ys, x) = y; ys is non-decreasing.
    static double interp_inverse(const Vec& xs, const Vec& ys, double y) {
        if (y <= ys.front()) return xs.front();
        if (y >= ys.back()) return xs.back();
        const auto it = std::lower_bound(ys.begin(), ys.end(), y);
        std::size_t i = static_cast<std::size_t>(it - ys.begin());
        if (i > 0) --i;
        while (i + 1 < ys.size() && ys[i + 1] < y) ++i;
        const double dy = ys[i + 1] - ys[i];
        if (dy <= 0.0) return xs[i];
        return xs[i] + (y - ys[i]) * (xs[i + 1] - xs[i]) / dy;
    }

    EncodingModel model_;
    Vec grid_;
    Vec target_cum_;
    Vec normal_cum_;
};

/// One-shot form of the resampling map; builds the tables per call. Use
/// LatentResampler directly when resampling many latents.
inline Latent resample_latent(const EncodingModel& m, const Latent& z, const TargetDensity& target) {
    return LatentResampler(m, target).resample(z);
}

} // namespace latdir
