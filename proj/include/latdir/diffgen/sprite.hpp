#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "latdir/diffgen/generator.hpp"
#include "latdir/numerics/rng.hpp"
#include "latdir/numerics/special.hpp"
#include "latdir/numerics/vec.hpp"

namespace latdir {

enum class SpriteShape { Disc, Square };

/// Closed-form sprite generator with known ground-truth factor encodings:
/// position follows x = Phi(<z,ux>) - 1/2 (uniform on [-0.5, 0.5] under a
/// standard normal latent) and the radius follows r = rmin + (rmax-rmin) *
/// Phi(<z,us>). Everything else in z is ignored, so ux, uy, us are the only
/// active directions and recovery can be scored exactly.
struct SpriteWorld {
    std::size_t d = 16;
    std::size_t height = 64;
    std::size_t width = 64;
    SpriteShape shape = SpriteShape::Disc;
    double tau = 1.5;  // edge softness in pixels
    double r_min = 6.0;
    double r_max = 16.0;
    Vec u_x; // ground-truth orthonormal factor directions
    Vec u_y;
    Vec u_s;
};

/// Default world: factor directions are the first three canonical axes rotated
/// by a seeded random orthogonal matrix, so recovery is nontrivial.
inline SpriteWorld make_sprite_world(std::size_t d = 16, std::uint64_t direction_seed = 7,
                                     std::size_t height = 64, std::size_t width = 64,
                                     SpriteShape shape = SpriteShape::Disc, double tau = 1.5,
                                     double r_min = 6.0, double r_max = 16.0) {
    if (d < 3) throw std::invalid_argument("make_sprite_world: need d >= 3");
    if (!(tau > 0.0)) throw std::invalid_argument("make_sprite_world: tau must be > 0");
    if (!(r_min < r_max)) throw std::invalid_argument("make_sprite_world: need r_min < r_max");
    SpriteWorld w;
    w.d = d;
    w.height = height;
    w.width = width;
    w.shape = shape;
    w.tau = tau;
    w.r_min = r_min;
    w.r_max = r_max;
    // Gram-Schmidt on Gaussian draws gives three orthonormal directions
    Rng rng(direction_seed);
    Vec dirs[3];
    for (int k = 0; k < 3; ++k) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            Vec v = rng.normal_vec(d);
            for (int j = 0; j < k; ++j) axpy(-dot(v, dirs[j]), dirs[j], v);
            if (norm(v) > 1e-6) {
                normalize(v);
                dirs[k] = std::move(v);
                break;
            }
        }
        if (dirs[k].empty()) throw std::runtime_error("make_sprite_world: degenerate direction draw");
    }
    w.u_x = std::move(dirs[0]);
    w.u_y = std::move(dirs[1]);
    w.u_s = std::move(dirs[2]);
    return w;
}

namespace detail {

inline double sprite_edge_distance(SpriteShape shape, double dx, double dy) {
    return shape == SpriteShape::Disc ? std::hypot(dx, dy) : std::max(std::abs(dx), std::abs(dy));
}

struct SpriteState {
    double px, py, ps;       // latent projections
    double cx, cy;           // sprite center in pixel coordinates
    double r;                // radius in pixels
};

inline SpriteState sprite_state(const SpriteWorld& w, const Latent& z) {
    if (z.size() != w.d) throw std::invalid_argument("sprite: latent dimension mismatch");
    SpriteState s;
    s.px = dot(z, w.u_x);
    s.py = dot(z, w.u_y);
    s.ps = dot(z, w.u_s);
    const double x = std_normal_cdf(s.px) - 0.5; // = erf(px/sqrt(2))/2, in [-0.5, 0.5]
    const double y = std_normal_cdf(s.py) - 0.5;
    s.cx = 0.5 * static_cast<double>(w.width - 1) + x * static_cast<double>(w.width);
    s.cy = 0.5 * static_cast<double>(w.height - 1) + y * static_cast<double>(w.height);
    s.r = w.r_min + (w.r_max - w.r_min) * std_normal_cdf(s.ps);
    return s;
}

} // namespace detail

/// Renders a single sprite directly from pixel-space parameters. Shared by the
/// analytic generator and the dataset synthesizer.
inline ImageGrid render_sprite(std::size_t height, std::size_t width, double cx, double cy,
                               double radius, double tau, SpriteShape shape, bool hard_edge = false) {
    ImageGrid img(height, width);
    for (std::size_t yi = 0; yi < height; ++yi) {
        for (std::size_t xi = 0; xi < width; ++xi) {
            const double dist = detail::sprite_edge_distance(shape, static_cast<double>(xi) - cx,
                                                             static_cast<double>(yi) - cy);
            img.at(yi, xi) = hard_edge ? (dist <= radius ? 1.0 : 0.0)
                                       : logistic((radius - dist) / tau);
        }
    }
    return img;
}

inline ImageGrid sprite_forward(const SpriteWorld& w, const Latent& z) {
    const auto s = detail::sprite_state(w, z);
    return render_sprite(w.height, w.width, s.cx, s.cy, s.r, w.tau, w.shape);
}

/// Exact chain-rule gradient of <cotangent, sprite_forward(z)> w.r.t. z.
/// The result lies in span(u_x, u_y, u_s) by construction.
inline Latent sprite_vjp(const SpriteWorld& w, const Latent& z, const ImageGrid& cotangent) {
    if (cotangent.height != w.height || cotangent.width != w.width)
        throw std::invalid_argument("sprite_vjp: cotangent shape mismatch");
    const auto s = detail::sprite_state(w, z);
    double acc_cx = 0.0, acc_cy = 0.0, acc_r = 0.0;
    for (std::size_t yi = 0; yi < w.height; ++yi) {
        for (std::size_t xi = 0; xi < w.width; ++xi) {
            const double ct = cotangent.at(yi, xi);
            if (ct == 0.0) continue;
            const double dx = static_cast<double>(xi) - s.cx;
            const double dy = static_cast<double>(yi) - s.cy;
            const double dist = detail::sprite_edge_distance(w.shape, dx, dy);
            const double slope = ct * logistic_deriv((s.r - dist) / w.tau) / w.tau;
            if (slope == 0.0) continue;
            acc_r += slope;
            if (dist > 1e-12) {
                if (w.shape == SpriteShape::Disc) {
                    acc_cx += slope * dx / dist;
                    acc_cy += slope * dy / dist;
                } else if (std::abs(dx) >= std::abs(dy)) {
                    acc_cx += slope * (dx >= 0.0 ? 1.0 : -1.0);
                } else {
                    acc_cy += slope * (dy >= 0.0 ? 1.0 : -1.0);
                }
            }
        }
    }
    // chain through center/radius laws; d(Phi)/dp is the normal density
    const double gx = acc_cx * static_cast<double>(w.width) * std_normal_pdf(s.px);
    const double gy = acc_cy * static_cast<double>(w.height) * std_normal_pdf(s.py);
    const double gr = acc_r * (w.r_max - w.r_min) * std_normal_pdf(s.ps);
    Latent grad(w.d, 0.0);
    axpy(gx, w.u_x, grad);
    axpy(gy, w.u_y, grad);
    axpy(gr, w.u_s, grad);
    return grad;
}

inline GeneratorSpec sprite_generator(const SpriteWorld& world) {
    GeneratorSpec g;
    g.latent_dim = world.d;
    g.height = world.height;
    g.width = world.width;
    g.forward = [world](const Latent& z) { return sprite_forward(world, z); };
    g.vjp = [world](const Latent& z, const ImageGrid& ct) { return sprite_vjp(world, z, ct); };
    return g;
}

} // namespace latdir
