#pragma once

#include <cstdint>
#include <vector>

#include "latdir/numerics/image.hpp"

namespace latdir {

/// Image plus per-pixel validity. Pixels whose source fell outside the frame
/// after a geometric transform are invalid and excluded from all losses.
struct MaskedImage {
    ImageGrid image;
    std::vector<std::uint8_t> mask; // 1 = valid

    MaskedImage() = default;
    explicit MaskedImage(ImageGrid img, bool valid = true)
        : image(std::move(img)), mask(image.pixels(), valid ? 1 : 0) {}

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (auto m : mask) n += m;
        return n;
    }
    bool empty_mask() const { return valid_count() == 0; }
};

inline MaskedImage full_mask(ImageGrid img) { return MaskedImage(std::move(img), true); }

} // namespace latdir
