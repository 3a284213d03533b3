#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "latdir/numerics/vec.hpp"

namespace latdir {

/// Adam optimizer state for one flat parameter block.
struct AdamState {
    std::uint64_t step = 0;
    Vec m; // first moment
    Vec v; // second moment
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n = 0, double lr = 1e-3) : m(n, 0.0), v(n, 0.0), learning_rate(lr) {}
};

/// One Adam update with bias correction, in place. Deterministic.
inline void adam_step(AdamState& state, Vec& params, const Vec& grads) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient/state size mismatch");
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double lr = state.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

} // namespace latdir
