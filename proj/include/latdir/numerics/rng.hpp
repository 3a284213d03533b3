#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "latdir/numerics/vec.hpp"

namespace latdir {

/// splitmix64 scramble; used to derive independent streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derived seed for worker/trajectory/step streams: deterministic in (base, idx).
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t idx) {
    return mix_seed(base ^ mix_seed(idx + 0x517CC1B727220A95ULL));
}

/// Seeded random source. Normal draws use Box-Muller on explicit uniforms,
/// so the sequence is reproducible independent of the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}
    Rng(std::uint64_t base, std::uint64_t stream) : engine_(stream_seed(base, stream)) {}

    /// uniform on [0, 1)
    double uniform() {
        // 53-bit mantissa from the top bits of one 64-bit draw
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// uniform on [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// standard normal draw (Box-Muller, two uniforms per call)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    Vec normal_vec(std::size_t n) {
        Vec v(n);
        for (double& x : v) x = normal();
        return v;
    }

    /// integer in [0, n)
    std::uint64_t index(std::uint64_t n) { return engine_() % n; }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 engine_;
};

} // namespace latdir
