#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "latdir/numerics/parallel.hpp"
#include "latdir/numerics/vec.hpp"

namespace latdir {

/// Row-major dense matrix of doubles.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
    std::size_t size() const { return data.size(); }

    bool operator==(const Mat& o) const = default;
};

inline Mat transpose(const Mat& a) {
    Mat t(a.cols, a.rows);
    constexpr std::size_t kTile = 32; // cache-friendly tiles
    for (std::size_t ib = 0; ib < a.rows; ib += kTile)
        for (std::size_t jb = 0; jb < a.cols; jb += kTile) {
            const std::size_t ie = std::min(a.rows, ib + kTile);
            const std::size_t je = std::min(a.cols, jb + kTile);
            for (std::size_t i = ib; i < ie; ++i)
                for (std::size_t j = jb; j < je; ++j) t.at(j, i) = a.at(i, j);
        }
    return t;
}

namespace detail {

/// C(row range) += A*B restricted to [row_lo, row_hi). Blocked over k and j so
/// the active B tile stays cached while the row range sweeps over it; the
/// inner kernel updates two C rows per pass so each B row is loaded once for
/// two rows of work.
inline void gemm_rows(const Mat& a, const Mat& b, Mat& c, std::size_t row_lo, std::size_t row_hi) {
    constexpr std::size_t KB = 256;
    constexpr std::size_t JB = 512;
    const std::size_t k_dim = a.cols;
    const std::size_t n = b.cols;
    for (std::size_t kb = 0; kb < k_dim; kb += KB) {
        const std::size_t ke = std::min(k_dim, kb + KB);
        for (std::size_t jb = 0; jb < n; jb += JB) {
            const std::size_t je = std::min(n, jb + JB);
            std::size_t i = row_lo;
            for (; i + 2 <= row_hi; i += 2) {
                const double* a0 = a.row(i);
                const double* a1 = a.row(i + 1);
                double* c0 = c.row(i);
                double* c1 = c.row(i + 1);
                std::size_t k = kb;
                for (; k + 2 <= ke; k += 2) {
                    const double a00 = a0[k], a01 = a0[k + 1];
                    const double a10 = a1[k], a11 = a1[k + 1];
                    const double* b0 = b.row(k);
                    const double* b1 = b.row(k + 1);
                    for (std::size_t j = jb; j < je; ++j) {
                        const double bv0 = b0[j], bv1 = b1[j];
                        c0[j] += a00 * bv0 + a01 * bv1;
                        c1[j] += a10 * bv0 + a11 * bv1;
                    }
                }
                for (; k < ke; ++k) {
                    const double av0 = a0[k], av1 = a1[k];
                    const double* brow = b.row(k);
                    for (std::size_t j = jb; j < je; ++j) {
                        c0[j] += av0 * brow[j];
                        c1[j] += av1 * brow[j];
                    }
                }
            }
            for (; i < row_hi; ++i) {
                const double* arow = a.row(i);
                double* crow = c.row(i);
                for (std::size_t k = kb; k < ke; ++k) {
                    const double ak = arow[k];
                    const double* brow = b.row(k);
                    for (std::size_t j = jb; j < je; ++j) crow[j] += ak * brow[j];
                }
            }
        }
    }
}

} // namespace detail

/// C = A * B. Rows of C are partitioned across workers; each row is written by
/// exactly one worker with a fixed accumulation order, so the result does not
/// depend on the worker count.
inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols) +
                                    " vs " + std::to_string(b.rows));
    Mat c(a.rows, b.cols);
    const std::size_t flop_rows_hint = 1 + 65536 / (1 + a.cols * b.cols);
    if (a.rows <= flop_rows_hint) {
        detail::gemm_rows(a, b, c, 0, a.rows);
        return c;
    }
    parallel_for(a.rows, [&](std::size_t lo, std::size_t hi) { detail::gemm_rows(a, b, c, lo, hi); });
    return c;
}

/// y = x^T * W for a row vector x; length of x must equal W.rows.
inline Vec vecmat(const Vec& x, const Mat& w) {
    if (x.size() != w.rows) throw std::invalid_argument("vecmat: x size vs W rows");
    Vec y(w.cols, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* wr = w.row(i);
        for (std::size_t j = 0; j < w.cols; ++j) y[j] += xi * wr[j];
    }
    return y;
}

/// x = W * y; length of y must equal W.cols.
inline Vec matvec(const Mat& w, const Vec& y) {
    if (y.size() != w.cols) throw std::invalid_argument("matvec: y size vs W cols");
    Vec x(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* wr = w.row(i);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t j = 0;
        for (; j + 4 <= w.cols; j += 4) {
            s0 += wr[j] * y[j];
            s1 += wr[j + 1] * y[j + 1];
            s2 += wr[j + 2] * y[j + 2];
            s3 += wr[j + 3] * y[j + 3];
        }
        for (; j < w.cols; ++j) s0 += wr[j] * y[j];
        x[i] = (s0 + s1) + (s2 + s3);
    }
    return x;
}

} // namespace latdir
