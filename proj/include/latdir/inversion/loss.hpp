#pragma once

#include <stdexcept>

#include "latdir/inversion/masked_image.hpp"
#include "latdir/numerics/gaussian.hpp"

namespace latdir {

enum class LossKind { Mse, FreqWeighted };

/// Reconstruction error specification. FreqWeighted is the Gaussian-blurred
/// squared difference: blurring the residual suppresses the penalty on high
/// spatial frequencies, which keeps inversion from trading detail for blur.
struct LossSpec {
    LossKind kind = LossKind::Mse;
    double sigma = 3.0; // FreqWeighted only

    static LossSpec mse() { return {LossKind::Mse, 0.0}; }
    static LossSpec freq_weighted(double sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("LossSpec: sigma must be > 0");
        return {LossKind::FreqWeighted, sigma};
    }
};

struct LossValue {
    double loss = 0.0;
    ImageGrid cotangent; // exact gradient w.r.t. the candidate image
};

/// Both kinds are means per pixel, so thresholds are comparable across image
/// sizes and mask areas. The residual is forced to zero on invalid pixels
/// before any blurring; the freq-weighted mean is divided by the valid-pixel
/// fraction so a shrinking mask does not shrink the loss.
///
/// FreqWeighted blurs with circular borders: that makes the spatial form and
/// the DFT pointwise-product form of the loss agree exactly, and makes the
/// blur self-adjoint, so the cotangent is just the blur applied twice.
inline LossValue recon_loss(const LossSpec& spec, const ImageGrid& candidate, const MaskedImage& target) {
    check_same_shape(candidate, target.image, "recon_loss");
    const std::size_t n = candidate.pixels();
    const std::size_t valid = target.valid_count();
    if (valid == 0) throw std::invalid_argument("recon_loss: empty mask, loss undefined");

    ImageGrid diff(candidate.height, candidate.width);
    for (std::size_t i = 0; i < n; ++i)
        diff.values[i] = target.mask[i] ? candidate.values[i] - target.image.values[i] : 0.0;

    LossValue out;
    if (spec.kind == LossKind::Mse) {
        double s = 0.0;
        for (double v : diff.values) s += v * v;
        out.loss = s / static_cast<double>(valid);
        out.cotangent = ImageGrid(candidate.height, candidate.width);
        const double scale = 2.0 / static_cast<double>(valid);
        for (std::size_t i = 0; i < n; ++i) out.cotangent.values[i] = scale * diff.values[i];
        return out;
    }

    const GaussianKernel kernel = gaussian_kernel(spec.sigma);
    ImageGrid blurred = convolve_separable_circular(diff, kernel);
    double s = 0.0;
    for (double v : blurred.values) s += v * v;
    const double valid_fraction = static_cast<double>(valid) / static_cast<double>(n);
    out.loss = s / static_cast<double>(n) / valid_fraction;

    ImageGrid twice = convolve_separable_circular(blurred, kernel);
    out.cotangent = ImageGrid(candidate.height, candidate.width);
    const double scale = 2.0 / (static_cast<double>(n) * valid_fraction);
    for (std::size_t i = 0; i < n; ++i)
        out.cotangent.values[i] = target.mask[i] ? scale * twice.values[i] : 0.0;
    return out;
}

} // namespace latdir
