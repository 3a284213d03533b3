#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "latdir/numerics/image.hpp"

namespace latdir {

/// Threshold-based factor estimators for near-binary images. Pixels at or
/// above 0.5 count as bright. Barycenters are reported in [-0.5, 0.5]
/// normalized image coordinates; scale is the bright-pixel fraction;
/// brightness is the plain mean intensity.
enum class EstimatorKind : std::uint32_t {
    BarycenterX = 0,
    BarycenterY = 1,
    Scale = 2,
    Brightness = 3,
};

inline const char* estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::BarycenterX: return "barycenter_x";
        case EstimatorKind::BarycenterY: return "barycenter_y";
        case EstimatorKind::Scale: return "scale";
        case EstimatorKind::Brightness: return "brightness";
    }
    return "?";
}

inline EstimatorKind estimator_from_name(const std::string& s) {
    if (s == "barycenter_x") return EstimatorKind::BarycenterX;
    if (s == "barycenter_y") return EstimatorKind::BarycenterY;
    if (s == "scale") return EstimatorKind::Scale;
    if (s == "brightness") return EstimatorKind::Brightness;
    throw std::invalid_argument("unknown estimator kind: " + s);
}

/// Returns nullopt when no pixel clears the threshold and the estimator
/// needs one (barycenter and scale kinds).
inline std::optional<double> estimate_factor(const ImageGrid& image, EstimatorKind kind) {
    constexpr double kThreshold = 0.5;
    if (kind == EstimatorKind::Brightness) {
        double s = 0.0;
        for (double v : image.values) s += v;
        return s / static_cast<double>(image.pixels());
    }

    double mass = 0.0, mx = 0.0, my = 0.0;
    std::size_t bright = 0;
    for (std::size_t y = 0; y < image.height; ++y) {
        for (std::size_t x = 0; x < image.width; ++x) {
            const double v = image.at(y, x);
            if (v < kThreshold) continue;
            ++bright;
            mass += v;
            mx += v * static_cast<double>(x);
            my += v * static_cast<double>(y);
        }
    }
    if (bright == 0) return std::nullopt;
    if (kind == EstimatorKind::Scale)
        return static_cast<double>(bright) / static_cast<double>(image.pixels());
    if (kind == EstimatorKind::BarycenterX)
        return (mx / mass + 0.5) / static_cast<double>(image.width) - 0.5;
    return (my / mass + 0.5) / static_cast<double>(image.height) - 0.5;
}

} // namespace latdir
