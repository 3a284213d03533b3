#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "latdir/inversion/masked_image.hpp"

namespace latdir {

/// Parametrized image transformation. Parameters compose additively:
/// translations in pixels, scale as log2 zoom (so additive steps compose
/// multiplicatively), rotation in radians, brightness as an additive offset.
enum class TransformKind : std::uint32_t {
    TranslateX = 0,
    TranslateY = 1,
    Scale = 2,
    Rotate = 3,
    Brightness = 4,
};

inline const char* transform_name(TransformKind k) {
    switch (k) {
        case TransformKind::TranslateX: return "translate_x";
        case TransformKind::TranslateY: return "translate_y";
        case TransformKind::Scale: return "scale";
        case TransformKind::Rotate: return "rotate";
        case TransformKind::Brightness: return "brightness";
    }
    return "?";
}

inline TransformKind transform_from_name(const std::string& s) {
    if (s == "translate_x") return TransformKind::TranslateX;
    if (s == "translate_y") return TransformKind::TranslateY;
    if (s == "scale") return TransformKind::Scale;
    if (s == "rotate") return TransformKind::Rotate;
    if (s == "brightness") return TransformKind::Brightness;
    throw std::invalid_argument("unknown transform kind: " + s);
}

struct TransformSpec {
    TransformKind kind = TransformKind::TranslateX;
    double t = 0.0;
};

namespace detail {

/// Bilinear sample with validity: invalid when the source point leaves the
/// [0, W-1] x [0, H-1] support of the pixel grid.
inline bool sample_bilinear(const ImageGrid& img, double sx, double sy, double& out) {
    const double w1 = static_cast<double>(img.width) - 1.0;
    const double h1 = static_cast<double>(img.height) - 1.0;
    if (sx < 0.0 || sy < 0.0 || sx > w1 || sy > h1) return false;
    const double fx = std::floor(sx), fy = std::floor(sy);
    const auto x0 = static_cast<std::size_t>(fx), y0 = static_cast<std::size_t>(fy);
    const std::size_t x1 = std::min(x0 + 1, img.width - 1);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double ax = sx - fx, ay = sy - fy;
    out = (1.0 - ay) * ((1.0 - ax) * img.at(y0, x0) + ax * img.at(y0, x1)) +
          ay * ((1.0 - ax) * img.at(y1, x0) + ax * img.at(y1, x1));
    return true;
}

} // namespace detail

/// Applies the transform. Geometric kinds resample bilinearly about the image
/// center and mark pixels with out-of-frame sources invalid; integer
/// translations degrade to exact pixel copies. Brightness adds t, clamps to
/// [0,1], and keeps the full mask.
inline MaskedImage transform_apply(const ImageGrid& image, const TransformSpec& spec) {
    if (!std::isfinite(spec.t)) throw std::invalid_argument("transform_apply: non-finite parameter");
    const std::size_t h = image.height, w = image.width;

    if (spec.kind == TransformKind::Brightness) {
        MaskedImage out(image, true);
        for (double& v : out.image.values) v = std::min(1.0, std::max(0.0, v + spec.t));
        return out;
    }

    MaskedImage out(ImageGrid(h, w), false);
    const double cx = 0.5 * (static_cast<double>(w) - 1.0);
    const double cy = 0.5 * (static_cast<double>(h) - 1.0);
    const double inv_zoom = spec.kind == TransformKind::Scale ? std::exp2(-spec.t) : 1.0;
    const double cos_t = std::cos(-spec.t), sin_t = std::sin(-spec.t);

    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double sx = static_cast<double>(x), sy = static_cast<double>(y);
            switch (spec.kind) {
                case TransformKind::TranslateX: sx -= spec.t; break;
                case TransformKind::TranslateY: sy -= spec.t; break;
                case TransformKind::Scale:
                    sx = cx + (sx - cx) * inv_zoom;
                    sy = cy + (sy - cy) * inv_zoom;
                    break;
                case TransformKind::Rotate: {
                    const double dx = sx - cx, dy = sy - cy;
                    sx = cx + cos_t * dx - sin_t * dy;
                    sy = cy + sin_t * dx + cos_t * dy;
                    break;
                }
                case TransformKind::Brightness: break; // handled above
            }
            double v;
            if (detail::sample_bilinear(image, sx, sy, v)) {
                out.image.at(y, x) = v;
                out.mask[y * w + x] = 1;
            }
        }
    }
    return out;
}

} // namespace latdir
