#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "latdir/numerics/vec.hpp"

namespace latdir {

/// Grayscale image on a regular grid, intensities nominally in [0, 1].
struct ImageGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    Vec values; // row-major

    ImageGrid() = default;
    ImageGrid(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), values(h * w, fill) {
        if (h < 1 || w < 1) throw std::invalid_argument("ImageGrid: empty dimensions");
    }

    double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
    double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
    std::size_t pixels() const { return values.size(); }

    bool same_shape(const ImageGrid& o) const { return height == o.height && width == o.width; }
    bool operator==(const ImageGrid& o) const = default;
};

inline void check_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": image shape mismatch");
}

inline double sum_squares(const ImageGrid& img) {
    double s = 0.0;
    for (double v : img.values) s += v * v;
    return s;
}

/// Binary PGM (P5, maxval 255). Values clamped to [0,1], rounded half-up.
inline void write_pgm(const ImageGrid& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double v : img.values) {
        const double c = std::min(1.0, std::max(0.0, v));
        const auto byte = static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
        out.put(static_cast<char>(byte));
    }
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

inline ImageGrid read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("read_pgm: not a P5 file: " + path);
    std::size_t w = 0, h = 0;
    int maxval = 0;
    in >> w >> h >> maxval;
    if (!in || w < 1 || h < 1 || maxval <= 0 || maxval > 255)
        throw std::runtime_error("read_pgm: bad header in " + path);
    in.get(); // single whitespace after header
    ImageGrid img(h, w);
    for (double& v : img.values) {
        const int c = in.get();
        if (c == EOF) throw std::runtime_error("read_pgm: truncated file " + path);
        v = static_cast<double>(c) / static_cast<double>(maxval);
    }
    return img;
}

} // namespace latdir
