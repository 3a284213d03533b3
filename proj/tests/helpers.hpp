#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "latdir/numerics/image.hpp"
#include "latdir/numerics/rng.hpp"
#include "latdir/numerics/vec.hpp"

namespace testutil {

inline latdir::ImageGrid random_image(std::size_t h, std::size_t w, latdir::Rng& rng) {
    latdir::ImageGrid img(h, w);
    for (double& v : img.values) v = rng.uniform();
    return img;
}

/// Central finite differences of a scalar function of a vector.
inline latdir::Vec finite_difference_gradient(const std::function<double(const latdir::Vec&)>& f,
                                              const latdir::Vec& x, double step = 1e-4) {
    latdir::Vec g(x.size());
    latdir::Vec probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + step;
        const double hi = f(probe);
        probe[i] = x[i] - step;
        const double lo = f(probe);
        probe[i] = x[i];
        g[i] = (hi - lo) / (2.0 * step);
    }
    return g;
}

/// Relative error between two gradients, scaled by the larger norm.
inline double gradient_rel_error(const latdir::Vec& a, const latdir::Vec& b) {
    const double scale = std::max({latdir::norm(a), latdir::norm(b), 1e-12});
    return latdir::norm(latdir::sub(a, b)) / scale;
}

/// Composite Simpson integration on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n = 2000) {
    if (n % 2 == 1) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Kolmogorov-Smirnov statistic of samples against a continuous CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
        d = std::max(d, std::abs(static_cast<double>(i) / n - f));
    }
    return d;
}

} // namespace testutil
