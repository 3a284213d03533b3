#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "latdir/diffgen/generator.hpp"
#include "latdir/numerics/binio.hpp"
#include "latdir/numerics/linalg.hpp"
#include "latdir/numerics/rng.hpp"
#include "latdir/numerics/special.hpp"

namespace latdir {

enum class Activation : std::uint32_t { Relu = 0, Sigmoid = 1, Identity = 2 };

inline double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Sigmoid: return logistic(x);
        case Activation::Identity: return x;
    }
    throw std::invalid_argument("apply_activation: unknown activation code");
}

/// Affine layer y = x^T W + b followed by an elementwise activation.
/// W is stored input-major (rows = fan-in, cols = fan-out).
struct DenseLayer {
    Mat weight;
    Vec bias;
    Activation act = Activation::Identity;
};

struct DenseNet {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.rows; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.cols; }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("DenseNet: no layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            if (l.bias.size() != l.weight.cols)
                throw std::invalid_argument("DenseNet: bias size mismatch at layer " + std::to_string(i));
            if (i > 0 && layers[i - 1].weight.cols != l.weight.rows)
                throw std::invalid_argument("DenseNet: dimension chain broken at layer " + std::to_string(i));
        }
    }
};

/// He-style initialization; final layer gets small weights so sigmoid outputs
/// start near 0.5.
inline DenseNet make_dense_net(const std::vector<std::size_t>& widths,
                               const std::vector<Activation>& acts, Rng& rng) {
    if (widths.size() < 2 || acts.size() != widths.size() - 1)
        throw std::invalid_argument("make_dense_net: widths/activations mismatch");
    DenseNet net;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        DenseLayer l;
        l.weight = Mat(widths[i], widths[i + 1]);
        l.bias.assign(widths[i + 1], 0.0);
        l.act = acts[i];
        const double s = std::sqrt(2.0 / static_cast<double>(widths[i]));
        for (double& v : l.weight.data) v = s * rng.normal();
        net.layers.push_back(std::move(l));
    }
    return net;
}

struct MlpTrace {
    std::vector<Vec> inputs;       // input vector seen by each layer
    std::vector<Vec> outputs;      // post-activation output of each layer
};

inline Vec mlp_forward_vec(const DenseNet& net, const Vec& z, MlpTrace* trace = nullptr) {
    if (z.size() != net.input_dim())
        throw std::invalid_argument("mlp_forward: latent dimension mismatch");
    Vec a = z;
    if (trace) {
        trace->inputs.clear();
        trace->outputs.clear();
    }
    for (const auto& l : net.layers) {
        if (trace) trace->inputs.push_back(a);
        Vec y = vecmat(a, l.weight);
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = apply_activation(l.act, y[j] + l.bias[j]);
        a = std::move(y);
        if (trace) trace->outputs.push_back(a);
    }
    return a;
}

inline ImageGrid mlp_forward(const DenseNet& net, const Vec& z, std::size_t height, std::size_t width) {
    Vec out = mlp_forward_vec(net, z);
    if (out.size() != height * width)
        throw std::invalid_argument("mlp_forward: output size does not match image shape");
    ImageGrid img(height, width);
    img.values = std::move(out);
    return img;
}

struct MlpGradients {
    Vec latent;                 // d<cotangent, output>/dz
    std::vector<Mat> weights;   // per-layer dW
    std::vector<Vec> biases;    // per-layer db
};

/// Reverse-mode backpropagation through the stack for one sample.
inline MlpGradients mlp_vjp_vec(const DenseNet& net, const Vec& z, const Vec& cotangent) {
    MlpTrace trace;
    mlp_forward_vec(net, z, &trace);
    if (cotangent.size() != net.output_dim())
        throw std::invalid_argument("mlp_vjp: cotangent size mismatch");

    MlpGradients g;
    g.weights.resize(net.layers.size());
    g.biases.resize(net.layers.size());
    Vec d = cotangent;
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const auto& l = net.layers[li];
        const Vec& out = trace.outputs[li];
        const Vec& in = trace.inputs[li];
        Vec dpre(d.size());
        for (std::size_t j = 0; j < d.size(); ++j) {
            switch (l.act) {
                case Activation::Relu: dpre[j] = out[j] > 0.0 ? d[j] : 0.0; break;
                case Activation::Sigmoid: dpre[j] = d[j] * out[j] * (1.0 - out[j]); break;
                case Activation::Identity: dpre[j] = d[j]; break;
            }
        }
        Mat dw(l.weight.rows, l.weight.cols);
        for (std::size_t i = 0; i < l.weight.rows; ++i) {
            const double xi = in[i];
            if (xi == 0.0) continue;
            double* row = dw.row(i);
            for (std::size_t j = 0; j < l.weight.cols; ++j) row[j] = xi * dpre[j];
        }
        g.weights[li] = std::move(dw);
        g.biases[li] = dpre;
        d = matvec(l.weight, dpre);
    }
    g.latent = std::move(d);
    return g;
}

inline MlpGradients mlp_vjp(const DenseNet& net, const Vec& z, const ImageGrid& cotangent) {
    return mlp_vjp_vec(net, z, cotangent.values);
}

/// Wraps a decoder network as a generator over a fixed image shape.
inline GeneratorSpec decoder_generator(DenseNet net, std::size_t height, std::size_t width) {
    net.validate();
    if (net.output_dim() != height * width)
        throw std::invalid_argument("decoder_generator: output size does not match image shape");
    auto shared = std::make_shared<DenseNet>(std::move(net));
    GeneratorSpec g;
    g.latent_dim = shared->input_dim();
    g.height = height;
    g.width = width;
    g.forward = [shared, height, width](const Latent& z) { return mlp_forward(*shared, z, height, width); };
    g.vjp = [shared](const Latent& z, const ImageGrid& ct) { return mlp_vjp(*shared, z, ct).latent; };
    return g;
}

// --- DGN1 binary serialization (little-endian) ------------------------------

inline void save_dense_net(const DenseNet& net, const std::string& path) {
    net.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_dense_net: cannot open " + path);
    out.write("DGN1", 4);
    detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.rows));
        detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.cols));
        detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(l.act));
        out.write(reinterpret_cast<const char*>(l.weight.data.data()),
                  static_cast<std::streamsize>(l.weight.data.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(l.bias.data()),
                  static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("save_dense_net: write failed for " + path);
}

inline DenseNet load_dense_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_dense_net: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "DGN1")
        throw std::runtime_error("load_dense_net: bad magic in " + path);
    const auto count = detail::read_raw<std::uint32_t>(in, "layer count");
    if (count == 0 || count > 64) throw std::runtime_error("load_dense_net: implausible layer count");
    DenseNet net;
    for (std::uint32_t i = 0; i < count; ++i) {
        DenseLayer l;
        const auto rows = detail::read_raw<std::uint32_t>(in, "rows");
        const auto cols = detail::read_raw<std::uint32_t>(in, "cols");
        const auto act = detail::read_raw<std::uint32_t>(in, "activation");
        if (act > 2) throw std::runtime_error("load_dense_net: unknown activation code");
        l.weight = Mat(rows, cols);
        l.bias.assign(cols, 0.0);
        l.act = static_cast<Activation>(act);
        in.read(reinterpret_cast<char*>(l.weight.data.data()),
                static_cast<std::streamsize>(l.weight.data.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(l.bias.data()),
                static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
        if (!in) throw std::runtime_error("load_dense_net: truncated layer data in " + path);
        net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
}

} // namespace latdir
