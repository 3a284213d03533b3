#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace latdir {

/// Dense real vector. Latent codes, gradients and knot values all use this.
using Vec = std::vector<double>;

inline void check_same_size(const Vec& a, const Vec& b, const char* what) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(what) + ": size mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
}

inline double dot(const Vec& a, const Vec& b) {
    check_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

/// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    check_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& a, double alpha) {
    for (double& v : a) v *= alpha;
}

inline Vec scaled(const Vec& a, double alpha) {
    Vec r = a;
    scale(r, alpha);
    return r;
}

inline Vec add(const Vec& a, const Vec& b) {
    check_same_size(a, b, "add");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    check_same_size(a, b, "sub");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline bool all_finite(const Vec& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

/// Rescale to unit Euclidean norm. Throws on (near-)zero input.
inline void normalize(Vec& a) {
    const double n = norm(a);
    if (n < 1e-300) throw std::invalid_argument("normalize: zero vector");
    scale(a, 1.0 / n);
}

} // namespace latdir
