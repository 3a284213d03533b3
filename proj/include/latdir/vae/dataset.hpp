#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "latdir/diffgen/sprite.hpp"
#include "latdir/numerics/binio.hpp"
#include "latdir/numerics/rng.hpp"

namespace latdir {

/// Procedural stand-in for a binary-sprites dataset: one white shape on a
/// dark background, position uniform on [-0.5, 0.5]^2 of the image extent,
/// radius uniform on [r_min, r_max]. Degenerate laws (lo == hi) pin a factor.
struct SpriteDatasetSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    SpriteShape shape = SpriteShape::Disc;
    double x_lo = -0.5, x_hi = 0.5;
    double y_lo = -0.5, y_hi = 0.5;
    double r_min = 6.0, r_max = 16.0;
    bool hard_edge = true;
    double tau = 1.5; // soft-edge width when hard_edge is off
    std::size_t count = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (count < 1) throw std::invalid_argument("SpriteDatasetSpec: count must be >= 1");
        if (r_min > r_max) throw std::invalid_argument("SpriteDatasetSpec: r_min > r_max");
        if (x_lo > x_hi || y_lo > y_hi)
            throw std::invalid_argument("SpriteDatasetSpec: empty position law");
    }
};

inline std::vector<ImageGrid> synth_dataset(const SpriteDatasetSpec& spec) {
    spec.validate();
    std::vector<ImageGrid> out;
    out.reserve(spec.count);
    Rng rng(spec.seed);
    const double w = static_cast<double>(spec.width);
    const double h = static_cast<double>(spec.height);
    for (std::size_t i = 0; i < spec.count; ++i) {
        const double x = spec.x_lo == spec.x_hi ? spec.x_lo : rng.uniform(spec.x_lo, spec.x_hi);
        const double y = spec.y_lo == spec.y_hi ? spec.y_lo : rng.uniform(spec.y_lo, spec.y_hi);
        const double r = spec.r_min == spec.r_max ? spec.r_min : rng.uniform(spec.r_min, spec.r_max);
        const double cx = 0.5 * (w - 1.0) + x * w;
        const double cy = 0.5 * (h - 1.0) + y * h;
        out.push_back(render_sprite(spec.height, spec.width, cx, cy, r, spec.tau, spec.shape,
                                    spec.hard_edge));
    }
    return out;
}

// --- SPR1 packed binary format ----------------------------------------------

inline void save_sprite_dataset(const std::vector<ImageGrid>& images, const std::string& path) {
    if (images.empty()) throw std::invalid_argument("save_sprite_dataset: empty dataset");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_sprite_dataset: cannot open " + path);
    out.write("SPR1", 4);
    detail::write_raw<std::uint64_t>(out, images.size());
    detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(images.front().height));
    detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(images.front().width));
    std::vector<char> bytes;
    for (const auto& img : images) {
        if (!img.same_shape(images.front()))
            throw std::invalid_argument("save_sprite_dataset: mixed image shapes");
        bytes.resize(img.pixels());
        for (std::size_t i = 0; i < img.pixels(); ++i) {
            const double c = std::min(1.0, std::max(0.0, img.values[i]));
            bytes[i] = static_cast<char>(static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5)));
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw std::runtime_error("save_sprite_dataset: write failed for " + path);
}

inline std::vector<ImageGrid> load_sprite_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_sprite_dataset: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "SPR1")
        throw std::runtime_error("load_sprite_dataset: bad magic in " + path);
    const auto count = detail::read_raw<std::uint64_t>(in, "image count");
    const auto h = detail::read_raw<std::uint32_t>(in, "height");
    const auto w = detail::read_raw<std::uint32_t>(in, "width");
    if (count == 0 || h == 0 || w == 0)
        throw std::runtime_error("load_sprite_dataset: bad header in " + path);
    std::vector<ImageGrid> images;
    images.reserve(count);
    std::vector<char> bytes(static_cast<std::size_t>(h) * w);
    for (std::uint64_t i = 0; i < count; ++i) {
        in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!in) throw std::runtime_error("load_sprite_dataset: truncated image in " + path);
        ImageGrid img(h, w);
        for (std::size_t p = 0; p < img.pixels(); ++p)
            img.values[p] = static_cast<double>(static_cast<std::uint8_t>(bytes[p])) / 255.0;
        images.push_back(std::move(img));
    }
    return images;
}

} // namespace latdir
