#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "latdir/diffgen/generator.hpp"
#include "latdir/inversion/loss.hpp"
#include "latdir/numerics/adam.hpp"

namespace latdir {

/// Euclidean projection onto the ball of the given radius. A standard normal
/// latent concentrates at norm sqrt(d), so constraining the optimizer to that
/// ball keeps iterates in the region the generator was trained on. The inside
/// test carries a few ulps of slack so reprojecting a just-projected point is
/// an exact no-op.
inline Latent project_ball(const Latent& z, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("project_ball: radius must be > 0");
    const double n = norm(z);
    if (n <= radius * (1.0 + 1e-14)) return z;
    return scaled(z, radius / n);
}

inline double default_ball_radius(std::size_t d) { return std::sqrt(static_cast<double>(d)); }

struct InversionConfig {
    double learning_rate = 1e-1;
    std::size_t max_iterations = 500;
    double projection_radius = 0.0;   // 0 means sqrt(d) of the generator
    double tolerance = 1e-10;         // best-loss improvement over a 50-step window
    std::uint64_t seed = 0;           // reserved for stochastic variants
};

inline constexpr std::size_t kInvertWindow = 50;

struct InversionResult {
    Latent z;                   // best iterate seen
    double loss = 0.0;          // loss at that iterate
    std::vector<double> curve;  // loss per iteration (evaluated before the step)
    std::size_t iterations = 0; // iterations actually run
};

/// Projected Adam descent of the reconstruction loss: pull the image-space
/// gradient back through the generator's vjp, take an Adam step, project onto
/// the norm ball. Returns the best iterate rather than the last one, since
/// the projected step can overshoot near the ball boundary.
inline InversionResult invert(const GeneratorSpec& gen, const MaskedImage& target,
                              const LossSpec& loss, const InversionConfig& config,
                              const Latent& z_init) {
    check_latent(gen, z_init, "invert");
    if (config.max_iterations < 1) throw std::invalid_argument("invert: need at least one iteration");
    if (target.empty_mask()) throw std::invalid_argument("invert: empty target mask");

    const double radius = config.projection_radius > 0.0 ? config.projection_radius
                                                         : default_ball_radius(gen.latent_dim);
    Latent z = project_ball(z_init, radius);
    AdamState adam(gen.latent_dim, config.learning_rate);

    InversionResult result;
    result.z = z;
    result.loss = std::numeric_limits<double>::infinity();
    result.curve.reserve(config.max_iterations);
    std::vector<double> best_history;
    best_history.reserve(config.max_iterations);

    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        const ImageGrid img = gen.forward(z);
        const LossValue lv = recon_loss(loss, img, target);
        if (!std::isfinite(lv.loss))
            throw std::runtime_error("invert: non-finite loss at iteration " + std::to_string(it));
        result.curve.push_back(lv.loss);
        if (lv.loss < result.loss) {
            result.loss = lv.loss;
            result.z = z;
        }
        best_history.push_back(result.loss);
        result.iterations = it + 1;
        if (it + 1 >= config.max_iterations) break;
        if (it >= kInvertWindow &&
            best_history[it - kInvertWindow] - best_history[it] < config.tolerance)
            break;

        Latent grad = gen.vjp(z, lv.cotangent);
        adam_step(adam, z, grad);
        z = project_ball(z, radius);
    }
    return result;
}

} // namespace latdir
