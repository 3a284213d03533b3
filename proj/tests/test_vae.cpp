#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "latdir/evaluation/estimators.hpp"
#include "latdir/vae/dataset.hpp"
#include "latdir/vae/train.hpp"

using namespace latdir;

TEST_SUITE_BEGIN("vae");

namespace {

SpriteDatasetSpec small_spec() {
    SpriteDatasetSpec s;
    s.height = 16;
    s.width = 16;
    s.r_min = 2.0;
    s.r_max = 5.0;
    s.x_lo = -0.3;
    s.x_hi = 0.3;
    s.y_lo = -0.3;
    s.y_hi = 0.3;
    s.count = 512;
    s.seed = 1;
    return s;
}

VaeConfig small_config() {
    VaeConfig c;
    c.latent_dim = 4;
    c.hidden = {64, 32};
    c.batch_size = 32;
    c.steps = 600;
    c.learning_rate = 2e-3;
    c.seed = 5;
    return c;
}

} // namespace

TEST_CASE("synth_dataset: degenerate laws produce identical images") {
    SpriteDatasetSpec s = small_spec();
    s.x_lo = s.x_hi = 0.1;
    s.y_lo = s.y_hi = -0.05;
    s.r_min = s.r_max = 3.0;
    s.count = 8;
    const auto imgs = synth_dataset(s);
    for (const auto& img : imgs) CHECK(img == imgs.front());
}

TEST_CASE("synth_dataset: mean x-position settles near zero at ten thousand samples") {
    SpriteDatasetSpec s;
    s.count = 10000;
    s.seed = 2;
    s.r_min = 4.0;
    s.r_max = 8.0;
    s.x_lo = -0.3; // keep discs in frame so the barycenter is unbiased
    s.x_hi = 0.3;
    s.y_lo = -0.3;
    s.y_hi = 0.3;
    const auto imgs = synth_dataset(s);
    double mean = 0.0;
    std::size_t n = 0;
    for (const auto& img : imgs) {
        if (auto est = estimate_factor(img, EstimatorKind::BarycenterX)) {
            mean += *est;
            ++n;
        }
    }
    REQUIRE(n == imgs.size());
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean) <= 0.01 * 0.6); // within 1% of the law's range
}

TEST_CASE("synth_dataset: hard-edge disc area matches pi r^2 within 5%") {
    SpriteDatasetSpec s;
    s.count = 1;
    s.x_lo = s.x_hi = 0.0;
    s.y_lo = s.y_hi = 0.0;
    s.r_min = s.r_max = 8.0;
    const auto imgs = synth_dataset(s);
    std::size_t bright = 0;
    for (double v : imgs[0].values) bright += v >= 0.5;
    const double expected = kPi * 64.0;
    CHECK(std::abs(static_cast<double>(bright) - expected) <= 0.05 * expected);
}

TEST_CASE("SPR1: save/load round-trip is byte-identical") {
    SpriteDatasetSpec s = small_spec();
    s.count = 6;
    const auto imgs = synth_dataset(s);
    const std::string p1 = "set_a.spr", p2 = "set_b.spr";
    save_sprite_dataset(imgs, p1);
    const auto back = load_sprite_dataset(p1);
    REQUIRE(back.size() == imgs.size());
    for (std::size_t i = 0; i < imgs.size(); ++i) CHECK(back[i] == imgs[i]); // binary sprites survive the byte quantization
    save_sprite_dataset(back, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("vae_loss: zero posterior stats give zero KL") {
    Rng rng(3);
    VaeConfig cfg = small_config();
    // encoder with zero weights and biases emits mu = logvar = 0 exactly
    DenseNet enc;
    enc.layers.push_back({Mat(16, 2 * cfg.latent_dim), Vec(2 * cfg.latent_dim, 0.0), Activation::Identity});
    DenseNet dec = make_vae_decoder(cfg, 16, rng);
    Mat batch(4, 16);
    for (double& v : batch.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const auto lv = vae_loss(enc, dec, batch, 1.0, 7);
    CHECK(lv.kl == 0.0);
}

TEST_CASE("vae_loss: beta zero reduces to plain reconstruction cross-entropy") {
    Rng rng(4);
    VaeConfig cfg = small_config();
    DenseNet enc = make_vae_encoder(cfg, 16, rng);
    DenseNet dec = make_vae_decoder(cfg, 16, rng);
    Mat batch(4, 16);
    for (double& v : batch.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const auto lv = vae_loss(enc, dec, batch, 0.0, 7);
    CHECK(lv.loss == lv.recon);
    CHECK(lv.kl >= 0.0);
}

TEST_CASE("vae_loss: KL is non-negative across random posteriors") {
    Rng rng(5);
    VaeConfig cfg = small_config();
    DenseNet enc = make_vae_encoder(cfg, 16, rng);
    DenseNet dec = make_vae_decoder(cfg, 16, rng);
    for (int trial = 0; trial < 10; ++trial) {
        Mat batch(3, 16);
        for (double& v : batch.data) v = rng.uniform();
        const auto lv = vae_loss(enc, dec, batch, 1.0, 100 + trial);
        CHECK(lv.kl >= 0.0);
    }
}

TEST_CASE("vae_loss: parameter gradients match finite differences") {
    Rng rng(6);
    VaeConfig cfg;
    cfg.latent_dim = 2;
    cfg.hidden = {8};
    DenseNet enc = make_vae_encoder(cfg, 16, rng);
    DenseNet dec = make_vae_decoder(cfg, 16, rng);
    Mat batch(3, 16);
    for (double& v : batch.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const double beta = 0.7;
    const std::uint64_t noise_seed = 11;
    const auto lv = vae_loss(enc, dec, batch, beta, noise_seed);

    auto loss_of = [&](const DenseNet& e, const DenseNet& d) {
        return vae_loss(e, d, batch, beta, noise_seed).loss;
    };
    // encoder weight gradients, layer by layer
    for (std::size_t li = 0; li < enc.layers.size(); ++li) {
        const auto fd = testutil::finite_difference_gradient(
            [&](const Vec& q) {
                DenseNet probe = enc;
                probe.layers[li].weight.data = q;
                return loss_of(probe, dec);
            },
            enc.layers[li].weight.data, 1e-5);
        CHECK(testutil::gradient_rel_error(lv.encoder.weights[li].data, fd) <= 1e-3);
    }
    for (std::size_t li = 0; li < dec.layers.size(); ++li) {
        const auto fd = testutil::finite_difference_gradient(
            [&](const Vec& q) {
                DenseNet probe = dec;
                probe.layers[li].weight.data = q;
                return loss_of(enc, probe);
            },
            dec.layers[li].weight.data, 1e-5);
        CHECK(testutil::gradient_rel_error(lv.decoder.weights[li].data, fd) <= 1e-3);
        const auto fdb = testutil::finite_difference_gradient(
            [&](const Vec& q) {
                DenseNet probe = dec;
                probe.layers[li].bias = q;
                return loss_of(enc, probe);
            },
            dec.layers[li].bias, 1e-5);
        CHECK(testutil::gradient_rel_error(lv.decoder.biases[li], fdb) <= 1e-3);
    }
}

TEST_CASE("vae_loss: shape mismatches are rejected") {
    Rng rng(7);
    VaeConfig cfg = small_config();
    DenseNet enc = make_vae_encoder(cfg, 16, rng);
    DenseNet dec = make_vae_decoder(cfg, 16, rng);
    Mat bad(3, 9);
    CHECK_THROWS_AS(vae_loss(enc, dec, bad, 1.0, 1), std::invalid_argument);
}

TEST_CASE("train_vae: zero steps return the initialization") {
    const auto data = synth_dataset(small_spec());
    VaeConfig cfg = small_config();
    cfg.steps = 0;
    const auto result = train_vae(cfg, data);
    Rng rng(cfg.seed);
    const DenseNet enc0 = make_vae_encoder(cfg, 256, rng);
    const DenseNet dec0 = make_vae_decoder(cfg, 256, rng);
    REQUIRE(result.decoder.layers.size() == dec0.layers.size());
    for (std::size_t i = 0; i < dec0.layers.size(); ++i)
        CHECK(result.decoder.layers[i].weight == dec0.layers[i].weight);
    CHECK(result.curve.empty());
}

TEST_CASE("train_vae: loss drops and the run is reproducible") {
    const auto data = synth_dataset(small_spec());
    VaeConfig cfg = small_config();
    const auto a = train_vae(cfg, data);
    REQUIRE(a.curve.size() == cfg.steps);
    CHECK(a.curve.back().loss < a.curve.front().loss);
    for (const auto& row : a.curve) CHECK(row.kl >= 0.0);

    const auto b = train_vae(cfg, data);
    for (std::size_t i = 0; i < a.decoder.layers.size(); ++i) {
        CHECK(a.decoder.layers[i].weight == b.decoder.layers[i].weight);
        CHECK(a.decoder.layers[i].bias == b.decoder.layers[i].bias);
    }
}

TEST_CASE("train_vae: beats the constant-half predictor on held-out sprites") {
    auto spec = small_spec();
    const auto data = synth_dataset(spec);
    spec.seed = 77; // held-out draw from the same law
    spec.count = 100;
    const auto held_out = synth_dataset(spec);

    VaeConfig cfg = small_config();
    const auto trained = train_vae(cfg, data);

    // mean per-pixel cross-entropy of reconstructions vs the ln(2) baseline
    double ce = 0.0;
    std::size_t npix = 0;
    Rng rng(9);
    for (const auto& img : held_out) {
        // encode deterministically through the posterior mean
        Vec stats = mlp_forward_vec(trained.encoder, img.values);
        Vec mu(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(cfg.latent_dim));
        const ImageGrid recon = trained.generator.forward(mu);
        for (std::size_t i = 0; i < img.pixels(); ++i) {
            const double p = std::min(1.0 - 1e-12, std::max(1e-12, recon.values[i]));
            ce += -(img.values[i] * std::log(p) + (1.0 - img.values[i]) * std::log(1.0 - p));
        }
        npix += img.pixels();
    }
    ce /= static_cast<double>(npix);
    CHECK(ce < std::log(2.0));
}

TEST_CASE("train_vae: training curve has a non-increasing smoothed tail") {
    const auto data = synth_dataset(small_spec());
    VaeConfig cfg = small_config();
    const auto result = train_vae(cfg, data);
    // soft trend check: 100-step moving average over the final half
    const std::size_t half = cfg.steps / 2;
    auto avg = [&](std::size_t start) {
        double s = 0.0;
        for (std::size_t i = start; i < start + 100; ++i) s += result.curve[i].loss;
        return s / 100.0;
    };
    CHECK(avg(cfg.steps - 100) <= avg(half) * 1.05); // 5% slack: stochastic batches
}

TEST_SUITE_END();
