#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "latdir/numerics/linalg.hpp"
#include "latdir/numerics/vec.hpp"

namespace latdir {

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (descending) and matching eigenvectors as rows.
inline void jacobi_eigen_symmetric(Mat a, Vec& eigenvalues, Mat& eigenvectors) {
    const std::size_t n = a.rows;
    if (a.cols != n) throw std::invalid_argument("jacobi_eigen_symmetric: matrix not square");
    Mat v(n, n);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a.at(i, i) > a.at(j, j); });
    eigenvalues.resize(n);
    eigenvectors = Mat(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        eigenvalues[r] = a.at(order[r], order[r]);
        for (std::size_t k = 0; k < n; ++k) eigenvectors.at(r, k) = v.at(k, order[r]);
    }
}

struct Pca2D {
    std::vector<std::array<double, 2>> projections;
    Vec axis1; // orthonormal principal axes in the input space
    Vec axis2;
    double var1 = 0.0; // variance captured per axis
    double var2 = 0.0;
    bool degenerate = false; // rank < 2: axis2 is arbitrary-but-orthonormal
    Vec mean;
};

/// Projects D-dimensional points onto the top-2 principal axes of their
/// centered covariance. For D > n the eigenproblem is solved on the n x n
/// Gram matrix, which shares its nonzero spectrum with the covariance.
inline Pca2D pca_project_2d(const std::vector<Vec>& points) {
    const std::size_t n = points.size();
    if (n < 3) throw std::invalid_argument("pca_project_2d: need at least 3 points");
    const std::size_t dim = points[0].size();
    if (dim < 2) throw std::invalid_argument("pca_project_2d: need dimension >= 2");
    for (const Vec& p : points)
        if (p.size() != dim) throw std::invalid_argument("pca_project_2d: ragged point list");

    Pca2D out;
    out.mean.assign(dim, 0.0);
    for (const Vec& p : points) axpy(1.0, p, out.mean);
    scale(out.mean, 1.0 / static_cast<double>(n));

    Mat centered(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) centered.at(i, j) = points[i][j] - out.mean[j];

    const double denom = static_cast<double>(n - 1);
    Vec evals;
    Mat evecs;
    if (dim <= n) {
        Mat cov = matmul(transpose(centered), centered);
        for (double& x : cov.data) x /= denom;
        jacobi_eigen_symmetric(cov, evals, evecs);
        out.axis1.assign(evecs.row(0), evecs.row(0) + dim);
        out.axis2.assign(evecs.row(1), evecs.row(1) + dim);
    } else {
        Mat gram = matmul(centered, transpose(centered));
        for (double& x : gram.data) x /= denom;
        jacobi_eigen_symmetric(gram, evals, evecs);
        auto lift = [&](std::size_t r) {
            Vec axis(dim, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < dim; ++j) axis[j] += evecs.at(r, i) * centered.at(i, j);
            return axis;
        };
        out.axis1 = lift(0);
        out.axis2 = lift(1);
    }
    out.var1 = std::max(0.0, evals[0]);
    out.var2 = evals.size() > 1 ? std::max(0.0, evals[1]) : 0.0;

    const double tol = 1e-12 * std::max(out.var1, 1e-300);
    if (norm(out.axis1) < 1e-150) {
        // all points identical: fall back to canonical axes
        out.degenerate = true;
        out.axis1.assign(dim, 0.0);
        out.axis1[0] = 1.0;
    } else {
        normalize(out.axis1);
    }
    if (out.var2 <= tol || norm(out.axis2) < 1e-150) {
        out.degenerate = true;
        // replace axis2 by any unit vector orthogonal to axis1
        Vec cand(dim, 0.0);
        std::size_t pick = 0;
        for (std::size_t j = 1; j < dim; ++j)
            if (std::abs(out.axis1[j]) < std::abs(out.axis1[pick])) pick = j;
        cand[pick] = 1.0;
        axpy(-dot(cand, out.axis1), out.axis1, cand);
        normalize(cand);
        out.axis2 = cand;
    } else {
        // re-orthogonalize against axis1 to clean up numerical drift
        axpy(-dot(out.axis2, out.axis1), out.axis1, out.axis2);
        normalize(out.axis2);
    }

    out.projections.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p1 = 0.0, p2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            p1 += centered.at(i, j) * out.axis1[j];
            p2 += centered.at(i, j) * out.axis2[j];
        }
        out.projections[i] = {p1, p2};
    }
    return out;
}

} // namespace latdir
