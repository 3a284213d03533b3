#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "latdir/diffgen/dense_net.hpp"
#include "latdir/numerics/adam.hpp"
#include "latdir/numerics/linalg.hpp"
#include "latdir/numerics/rng.hpp"
#include "latdir/numerics/special.hpp"

namespace latdir {

struct VaeConfig {
    double beta = 1.0;
    std::size_t latent_dim = 10;
    std::vector<std::size_t> hidden = {512, 256}; // encoder widths; decoder mirrors them
    double learning_rate = 5e-4;
    std::size_t batch_size = 128;
    std::size_t steps = 20000; // desk scale; the reference setting is 1e5
    std::uint64_t seed = 0;

    void validate() const {
        if (beta < 0.0) throw std::invalid_argument("VaeConfig: beta must be >= 0");
        if (latent_dim < 2) throw std::invalid_argument("VaeConfig: latent_dim must be >= 2");
        if (batch_size < 1) throw std::invalid_argument("VaeConfig: batch_size must be >= 1");
    }
};

/// Encoder maps pixels to (mean, log-variance) pairs: output width 2*latent.
inline DenseNet make_vae_encoder(const VaeConfig& cfg, std::size_t pixels, Rng& rng) {
    std::vector<std::size_t> widths{pixels};
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(2 * cfg.latent_dim);
    std::vector<Activation> acts(widths.size() - 1, Activation::Relu);
    acts.back() = Activation::Identity;
    return make_dense_net(widths, acts, rng);
}

inline DenseNet make_vae_decoder(const VaeConfig& cfg, std::size_t pixels, Rng& rng) {
    std::vector<std::size_t> widths{cfg.latent_dim};
    widths.insert(widths.end(), cfg.hidden.rbegin(), cfg.hidden.rend());
    widths.push_back(pixels);
    std::vector<Activation> acts(widths.size() - 1, Activation::Relu);
    acts.back() = Activation::Sigmoid;
    return make_dense_net(widths, acts, rng);
}

/// Per-network gradients in layer order.
struct NetGradients {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
};

struct VaeLossValue {
    double loss = 0.0;  // recon + beta * kl
    double recon = 0.0; // mean per-sample bernoulli cross-entropy (summed over pixels)
    double kl = 0.0;    // mean per-sample KL to the standard normal prior
    NetGradients encoder;
    NetGradients decoder;
};

namespace detail {

/// Batched affine+activation forward; keeps per-layer inputs and outputs.
struct BatchTrace {
    std::vector<Mat> inputs;
    std::vector<Mat> outputs;
};

inline Mat batch_forward(const DenseNet& net, Mat x, BatchTrace* trace, bool skip_last_activation) {
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const auto& l = net.layers[li];
        if (trace) trace->inputs.push_back(x);
        Mat y = matmul(x, l.weight);
        const bool last = li + 1 == net.layers.size();
        for (std::size_t i = 0; i < y.rows; ++i) {
            double* row = y.row(i);
            for (std::size_t j = 0; j < y.cols; ++j) {
                const double pre = row[j] + l.bias[j];
                row[j] = (last && skip_last_activation) ? pre : apply_activation(l.act, pre);
            }
        }
        if (trace) trace->outputs.push_back(y);
        x = std::move(y);
    }
    return x;
}

/// Backpropagates d through the stack; d arrives as the gradient w.r.t. the
/// last layer's pre-activation when skip_last_activation was used.
inline Mat batch_backward(const DenseNet& net, const BatchTrace& trace, Mat d,
                          NetGradients& grads, bool d_is_preactivation) {
    grads.weights.resize(net.layers.size());
    grads.biases.resize(net.layers.size());
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const auto& l = net.layers[li];
        const Mat& out = trace.outputs[li];
        const bool last = li + 1 == net.layers.size();
        if (!(last && d_is_preactivation)) {
            for (std::size_t i = 0; i < d.rows; ++i) {
                double* drow = d.row(i);
                const double* orow = out.row(i);
                for (std::size_t j = 0; j < d.cols; ++j) {
                    switch (l.act) {
                        case Activation::Relu: drow[j] = orow[j] > 0.0 ? drow[j] : 0.0; break;
                        case Activation::Sigmoid: drow[j] *= orow[j] * (1.0 - orow[j]); break;
                        case Activation::Identity: break;
                    }
                }
            }
        }
        grads.weights[li] = matmul(transpose(trace.inputs[li]), d);
        Vec db(l.weight.cols, 0.0);
        for (std::size_t i = 0; i < d.rows; ++i) {
            const double* drow = d.row(i);
            for (std::size_t j = 0; j < d.cols; ++j) db[j] += drow[j];
        }
        grads.biases[li] = std::move(db);
        d = matmul(d, transpose(l.weight)); // at li == 0 this is the input gradient
    }
    return d;
}

} // namespace detail

/// beta-VAE objective on one batch: mean over samples of the bernoulli
/// cross-entropy (summed over pixels) plus beta times the KL of the
/// approximate posterior to the unit Gaussian, with reparametrized sampling
/// driven by noise_seed. The final decoder layer is evaluated in logit form
/// so the cross-entropy and its gradient stay finite at saturated pixels.
inline VaeLossValue vae_loss(const DenseNet& encoder, const DenseNet& decoder, const Mat& batch,
                             double beta, std::uint64_t noise_seed) {
    if (encoder.output_dim() != 2 * decoder.input_dim())
        throw std::invalid_argument("vae_loss: encoder must emit (mean, log-variance) pairs");
    if (batch.cols != encoder.input_dim() || batch.cols != decoder.output_dim())
        throw std::invalid_argument("vae_loss: batch width does not match the networks");

    const std::size_t b = batch.rows;
    const std::size_t latent = decoder.input_dim();
    const double inv_b = 1.0 / static_cast<double>(b);

    detail::BatchTrace enc_trace;
    const Mat stats = detail::batch_forward(encoder, batch, &enc_trace, false);

    Mat zsample(b, latent);
    Mat eps(b, latent);
    Rng rng(noise_seed);
    double kl = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* srow = stats.row(i);
        for (std::size_t j = 0; j < latent; ++j) {
            const double mu = srow[j];
            const double lv = srow[latent + j];
            const double e = rng.normal();
            eps.at(i, j) = e;
            zsample.at(i, j) = mu + std::exp(0.5 * lv) * e;
            kl += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
        }
    }
    kl *= inv_b;

    detail::BatchTrace dec_trace;
    const Mat logits = detail::batch_forward(decoder, zsample, &dec_trace, true);

    double recon = 0.0;
    Mat dlogits(b, batch.cols);
    for (std::size_t i = 0; i < b; ++i) {
        const double* lrow = logits.row(i);
        const double* xrow = batch.row(i);
        double* drow = dlogits.row(i);
        for (std::size_t j = 0; j < batch.cols; ++j) {
            recon += softplus(lrow[j]) - xrow[j] * lrow[j];
            drow[j] = (logistic(lrow[j]) - xrow[j]) * inv_b;
        }
    }
    recon *= inv_b;

    VaeLossValue out;
    out.recon = recon;
    out.kl = kl;
    out.loss = recon + beta * kl;
    if (!std::isfinite(out.loss)) return out; // caller decides how to abort

    const Mat dz = detail::batch_backward(decoder, dec_trace, std::move(dlogits), out.decoder, true);

    Mat dstats(b, 2 * latent);
    for (std::size_t i = 0; i < b; ++i) {
        const double* srow = stats.row(i);
        const double* dzrow = dz.row(i);
        double* drow = dstats.row(i);
        for (std::size_t j = 0; j < latent; ++j) {
            const double mu = srow[j];
            const double lv = srow[latent + j];
            const double through_sample = dzrow[j];
            drow[j] = through_sample + beta * inv_b * mu;
            drow[latent + j] = through_sample * 0.5 * std::exp(0.5 * lv) * eps.at(i, j) +
                               beta * inv_b * 0.5 * (std::exp(lv) - 1.0);
        }
    }
    detail::batch_backward(encoder, enc_trace, std::move(dstats), out.encoder, false);
    return out;
}

struct TrainCurveRow {
    std::size_t step = 0;
    double loss = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

struct VaeTrainResult {
    DenseNet encoder;
    DenseNet decoder;
    GeneratorSpec generator; // the decoder wrapped over the image grid
    std::vector<TrainCurveRow> curve;
};

/// Adam training loop; batches, reparametrization noise and initialization
/// all derive from the config seed, so runs are reproducible.
inline VaeTrainResult train_vae(const VaeConfig& cfg, const std::vector<ImageGrid>& dataset) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train_vae: empty dataset");
    const std::size_t h = dataset.front().height;
    const std::size_t w = dataset.front().width;
    const std::size_t pixels = h * w;
    for (const auto& img : dataset)
        if (!img.same_shape(dataset.front()))
            throw std::invalid_argument("train_vae: mixed image shapes in dataset");

    Rng init_rng(cfg.seed);
    VaeTrainResult result;
    result.encoder = make_vae_encoder(cfg, pixels, init_rng);
    result.decoder = make_vae_decoder(cfg, pixels, init_rng);

    auto adam_for = [&](const DenseNet& net) {
        std::vector<AdamState> states;
        for (const auto& l : net.layers) {
            states.emplace_back(l.weight.size(), cfg.learning_rate);
            states.emplace_back(l.bias.size(), cfg.learning_rate);
        }
        return states;
    };
    std::vector<AdamState> enc_adam = adam_for(result.encoder);
    std::vector<AdamState> dec_adam = adam_for(result.decoder);

    Rng batch_rng(cfg.seed, 0xBA7C4);
    Mat batch(cfg.batch_size, pixels);
    result.curve.reserve(cfg.steps);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        for (std::size_t i = 0; i < cfg.batch_size; ++i) {
            const auto& img = dataset[batch_rng.index(dataset.size())];
            std::copy(img.values.begin(), img.values.end(), batch.row(i));
        }
        VaeLossValue lv = vae_loss(result.encoder, result.decoder, batch, cfg.beta,
                                   stream_seed(cfg.seed, step + 1));
        if (!std::isfinite(lv.loss))
            throw std::runtime_error("train_vae: loss diverged (non-finite) at step " +
                                     std::to_string(step));
        result.curve.push_back({step, lv.loss, lv.recon, lv.kl});

        auto update = [](DenseNet& net, const NetGradients& g, std::vector<AdamState>& adam) {
            for (std::size_t li = 0; li < net.layers.size(); ++li) {
                adam_step(adam[2 * li], net.layers[li].weight.data, g.weights[li].data);
                adam_step(adam[2 * li + 1], net.layers[li].bias, g.biases[li]);
            }
        };
        update(result.encoder, lv.encoder, enc_adam);
        update(result.decoder, lv.decoder, dec_adam);
    }

    result.generator = decoder_generator(result.decoder, h, w);
    return result;
}

inline void export_train_curve_csv(const std::vector<TrainCurveRow>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_train_curve_csv: cannot open " + path);
    out << "step,loss,recon,kl\n";
    out.precision(17);
    for (const auto& r : curve) out << r.step << "," << r.loss << "," << r.recon << "," << r.kl << "\n";
}

} // namespace latdir
