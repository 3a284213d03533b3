#pragma once

#include <functional>

#include "latdir/numerics/image.hpp"
#include "latdir/numerics/vec.hpp"

namespace latdir {

/// Latent code: point in the generator's input space.
using Latent = Vec;

/// Differentiable-generator contract: forward map z -> image plus the
/// vector-Jacobian product needed for gradient-based inversion. Instances are
/// immutable after construction and safe to share across workers.
struct GeneratorSpec {
    std::size_t latent_dim = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::function<ImageGrid(const Latent&)> forward;
    /// Returns d<cotangent, forward(z)>/dz.
    std::function<Latent(const Latent&, const ImageGrid&)> vjp;
};

inline void check_latent(const GeneratorSpec& g, const Latent& z, const char* what) {
    if (z.size() != g.latent_dim)
        throw std::invalid_argument(std::string(what) + ": latent dimension " +
                                    std::to_string(z.size()) + " != " + std::to_string(g.latent_dim));
}

} // namespace latdir
