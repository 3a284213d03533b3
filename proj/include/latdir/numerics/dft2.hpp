#pragma once

#include <complex>
#include <vector>

#include "latdir/numerics/image.hpp"
#include "latdir/numerics/special.hpp"

namespace latdir {

/// Complex 2-D spectrum, row-major, same grid as the source image.
struct Spectrum {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::complex<double>> values;

    std::complex<double>& at(std::size_t v, std::size_t u) { return values[v * width + u]; }
    std::complex<double> at(std::size_t v, std::size_t u) const { return values[v * width + u]; }
};

namespace detail {

/// Direct 1-D DFT along each row of a complex buffer (length n, count rows).
/// O(n^2) per row; this is a reference transform for analysis and tests, not
/// a performance path.
inline void dft1_rows(std::vector<std::complex<double>>& buf, std::size_t count, std::size_t n, bool inverse) {
    const double sign = inverse ? 2.0 * kPi / static_cast<double>(n) : -2.0 * kPi / static_cast<double>(n);
    std::vector<std::complex<double>> twiddle(n);
    for (std::size_t k = 0; k < n; ++k)
        twiddle[k] = std::polar(1.0, sign * static_cast<double>(k));
    std::vector<std::complex<double>> row(n);
    for (std::size_t r = 0; r < count; ++r) {
        std::complex<double>* p = buf.data() + r * n;
        for (std::size_t k = 0; k < n; ++k) {
            std::complex<double> acc(0.0, 0.0);
            std::size_t idx = 0;
            for (std::size_t x = 0; x < n; ++x) {
                acc += p[x] * twiddle[idx];
                idx += k;
                if (idx >= n) idx -= n;
            }
            row[k] = acc;
        }
        for (std::size_t k = 0; k < n; ++k) p[k] = row[k];
    }
}

inline void transpose_complex(std::vector<std::complex<double>>& buf, std::size_t rows, std::size_t cols) {
    std::vector<std::complex<double>> t(buf.size());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = buf[i * cols + j];
    buf.swap(t);
}

inline void dft2_inplace(std::vector<std::complex<double>>& buf, std::size_t h, std::size_t w, bool inverse) {
    dft1_rows(buf, h, w, inverse);
    transpose_complex(buf, h, w);
    dft1_rows(buf, w, h, inverse);
    transpose_complex(buf, w, h);
    const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
    for (auto& v : buf) v *= scale;
}

} // namespace detail

/// Unitary 2-D discrete Fourier transform; Parseval holds without extra factors.
inline Spectrum dft2(const ImageGrid& image) {
    Spectrum s;
    s.height = image.height;
    s.width = image.width;
    s.values.assign(image.values.begin(), image.values.end());
    detail::dft2_inplace(s.values, s.height, s.width, false);
    return s;
}

/// Unitary inverse transform; real part of the result.
inline ImageGrid idft2_real(const Spectrum& spec) {
    std::vector<std::complex<double>> buf = spec.values;
    detail::dft2_inplace(buf, spec.height, spec.width, true);
    ImageGrid img(spec.height, spec.width);
    for (std::size_t i = 0; i < buf.size(); ++i) img.values[i] = buf[i].real();
    return img;
}

inline double spectrum_energy(const Spectrum& s) {
    double e = 0.0;
    for (const auto& v : s.values) e += std::norm(v);
    return e;
}

} // namespace latdir
