#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "latdir/numerics/image.hpp"
#include "latdir/numerics/vec.hpp"

namespace latdir {

/// 1-D normalized Gaussian taps, truncated at radius ceil(3*sigma).
struct GaussianKernel {
    double sigma = 0.0;
    std::size_t radius = 0;
    Vec weights; // length 2*radius + 1, symmetric, sums to 1

    double tap(std::ptrdiff_t k) const { return weights[static_cast<std::size_t>(k + static_cast<std::ptrdiff_t>(radius))]; }
};

inline GaussianKernel gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
    GaussianKernel k;
    k.sigma = sigma;
    k.radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
    k.weights.resize(2 * k.radius + 1);
    const auto r = static_cast<std::ptrdiff_t>(k.radius);
    double sum = 0.0;
    for (std::ptrdiff_t i = -r; i <= r; ++i) {
        const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k.weights[static_cast<std::size_t>(i + r)] = w;
        sum += w;
    }
    for (double& w : k.weights) w /= sum;
    return k;
}

namespace detail {

enum class Border { Zero, Wrap };

inline void convolve_rows(const ImageGrid& src, const GaussianKernel& k, ImageGrid& dst, Border border) {
    const auto w = static_cast<std::ptrdiff_t>(src.width);
    const auto r = static_cast<std::ptrdiff_t>(k.radius);
    for (std::size_t y = 0; y < src.height; ++y) {
        const double* in = &src.values[y * src.width];
        double* out = &dst.values[y * src.width];
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i) {
                std::ptrdiff_t sx = x - i;
                if (border == Border::Wrap) {
                    sx %= w;
                    if (sx < 0) sx += w;
                } else if (sx < 0 || sx >= w) {
                    continue;
                }
                acc += k.tap(i) * in[sx];
            }
            out[x] = acc;
        }
    }
}

inline void convolve_cols(const ImageGrid& src, const GaussianKernel& k, ImageGrid& dst, Border border) {
    const auto h = static_cast<std::ptrdiff_t>(src.height);
    const auto r = static_cast<std::ptrdiff_t>(k.radius);
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        double* out = &dst.values[static_cast<std::size_t>(y) * src.width];
        for (std::ptrdiff_t i = -r; i <= r; ++i) {
            std::ptrdiff_t sy = y - i;
            if (border == Border::Wrap) {
                sy %= h;
                if (sy < 0) sy += h;
            } else if (sy < 0 || sy >= h) {
                continue;
            }
            const double tap = k.tap(i);
            const double* in = &src.values[static_cast<std::size_t>(sy) * src.width];
            for (std::size_t x = 0; x < src.width; ++x) out[x] += tap * in[x];
        }
    }
}

inline ImageGrid convolve_separable_impl(const ImageGrid& image, const GaussianKernel& k, Border border) {
    ImageGrid tmp(image.height, image.width);
    convolve_rows(image, k, tmp, border);
    ImageGrid out(image.height, image.width);
    convolve_cols(tmp, k, out, border);
    return out;
}

} // namespace detail

/// Separable Gaussian blur with zero padding at the borders; output same size.
inline ImageGrid convolve_separable(const ImageGrid& image, const GaussianKernel& k) {
    return detail::convolve_separable_impl(image, k, detail::Border::Zero);
}

/// Separable Gaussian blur with circular (wrap-around) borders. This is the
/// blur used inside the frequency-weighted loss, where the spatial and
/// DFT-product forms must agree exactly.
inline ImageGrid convolve_separable_circular(const ImageGrid& image, const GaussianKernel& k) {
    return detail::convolve_separable_impl(image, k, detail::Border::Wrap);
}

} // namespace latdir
