#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "latdir/diffgen/dense_net.hpp"
#include "latdir/diffgen/sprite.hpp"
#include "latdir/numerics/special.hpp"

using namespace latdir;

TEST_SUITE_BEGIN("diffgen");

namespace {

SpriteWorld test_world() { return make_sprite_world(16, /*direction_seed=*/7); }

} // namespace

TEST_CASE("sprite: factor directions are orthonormal") {
    const auto w = test_world();
    CHECK(std::abs(norm(w.u_x) - 1.0) <= 1e-12);
    CHECK(std::abs(norm(w.u_y) - 1.0) <= 1e-12);
    CHECK(std::abs(norm(w.u_s) - 1.0) <= 1e-12);
    CHECK(std::abs(dot(w.u_x, w.u_y)) <= 1e-12);
    CHECK(std::abs(dot(w.u_x, w.u_s)) <= 1e-12);
    CHECK(std::abs(dot(w.u_y, w.u_s)) <= 1e-12);
}

TEST_CASE("sprite: zero latent renders the centered mid-radius sprite") {
    const auto w = test_world();
    const auto img = sprite_forward(w, Latent(w.d, 0.0));
    // erf(0) = 0 and Phi(0) = 1/2: center (31.5, 31.5), radius 11
    const auto expected = render_sprite(64, 64, 31.5, 31.5, 11.0, w.tau, SpriteShape::Disc);
    CHECK(img == expected);
    CHECK(img.at(31, 31) > 0.99);
    CHECK(img.at(0, 0) < 1e-6);
}

TEST_CASE("sprite: unit projection on u_x shifts the center by Phi(1) - 1/2 of the extent") {
    const auto w = test_world();
    const double shift = std_normal_cdf(1.0) - 0.5;
    CHECK(shift == doctest::Approx(0.341345).epsilon(1e-5));
    const auto img = sprite_forward(w, w.u_x); // projections (1, 0, 0)
    const auto expected = render_sprite(64, 64, 31.5 + shift * 64.0, 31.5, 11.0, w.tau, SpriteShape::Disc);
    for (std::size_t i = 0; i < img.pixels(); ++i)
        CHECK(std::abs(img.values[i] - expected.values[i]) <= 1e-12);
}

TEST_CASE("sprite: directions outside the factor span do not change the image") {
    const auto w = test_world();
    Rng rng(3);
    const Latent z = rng.normal_vec(w.d);
    Vec v = rng.normal_vec(w.d);
    axpy(-dot(v, w.u_x), w.u_x, v);
    axpy(-dot(v, w.u_y), w.u_y, v);
    axpy(-dot(v, w.u_s), w.u_s, v);
    const auto a = sprite_forward(w, z);
    const auto b = sprite_forward(w, add(z, v));
    for (std::size_t i = 0; i < a.pixels(); ++i)
        CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-10);
}

TEST_CASE("sprite: forward is deterministic") {
    const auto w = test_world();
    Rng rng(4);
    const Latent z = rng.normal_vec(w.d);
    CHECK(sprite_forward(w, z) == sprite_forward(w, z));
}

TEST_CASE("sprite vjp: zero cotangent gives zero gradient") {
    const auto w = test_world();
    Rng rng(5);
    const Latent z = rng.normal_vec(w.d);
    const auto g = sprite_vjp(w, z, ImageGrid(64, 64, 0.0));
    CHECK(norm(g) == 0.0);
}

TEST_CASE("sprite vjp: matches central finite differences") {
    const auto w = test_world();
    Rng rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        const Latent z = rng.normal_vec(w.d);
        ImageGrid ct(64, 64);
        for (double& v : ct.values) v = rng.normal();
        const auto analytic = sprite_vjp(w, z, ct);
        const auto fd = testutil::finite_difference_gradient(
            [&](const Vec& q) {
                const auto img = sprite_forward(w, q);
                return dot(img.values, ct.values);
            },
            z, 1e-4);
        CHECK(testutil::gradient_rel_error(analytic, fd) <= 1e-4);
    }
}

TEST_CASE("sprite vjp: gradient lies in the factor span") {
    const auto w = test_world();
    Rng rng(7);
    const Latent z = rng.normal_vec(w.d);
    ImageGrid ct(64, 64);
    for (double& v : ct.values) v = rng.normal();
    const auto g = sprite_vjp(w, z, ct);
    Vec v = rng.normal_vec(w.d);
    axpy(-dot(v, w.u_x), w.u_x, v);
    axpy(-dot(v, w.u_y), w.u_y, v);
    axpy(-dot(v, w.u_s), w.u_s, v);
    CHECK(std::abs(dot(g, v)) <= 1e-10 * std::max(1.0, norm(g)) * norm(v));
}

TEST_CASE("sprite: x-position is uniform on [-0.5, 0.5] under standard normal latents") {
    const auto w = test_world();
    Rng rng(8);
    std::vector<double> xs;
    xs.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
        const Latent z = rng.normal_vec(w.d);
        xs.push_back(std_normal_cdf(dot(z, w.u_x)) - 0.5);
    }
    const double ks = testutil::ks_statistic(
        xs, [](double x) { return std::min(1.0, std::max(0.0, x + 0.5)); });
    CHECK(ks <= 0.01);
}

TEST_CASE("sprite: dimension mismatch is rejected") {
    const auto w = test_world();
    CHECK_THROWS_AS(sprite_forward(w, Latent(5, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(sprite_vjp(w, Latent(5, 0.0), ImageGrid(64, 64)), std::invalid_argument);
}

// --- dense nets --------------------------------------------------------------

TEST_CASE("mlp: zero single layer outputs sigmoid(0) everywhere") {
    DenseNet net;
    net.layers.push_back({Mat(4, 9), Vec(9, 0.0), Activation::Sigmoid});
    const auto img = mlp_forward(net, Vec{0.3, -1.0, 2.0, 0.7}, 3, 3);
    for (double v : img.values) CHECK(v == 0.5);
}

TEST_CASE("mlp: one layer matches the direct logistic evaluation") {
    Rng rng(9);
    DenseNet net;
    net.layers.push_back({Mat(5, 2), Vec{0.1, -0.4}, Activation::Sigmoid});
    for (double& v : net.layers[0].weight.data) v = rng.normal();
    const Vec z = rng.normal_vec(5);
    const Vec out = mlp_forward_vec(net, z);
    for (std::size_t j = 0; j < 2; ++j) {
        double pre = net.layers[0].bias[j];
        for (std::size_t i = 0; i < 5; ++i) pre += z[i] * net.layers[0].weight.at(i, j);
        CHECK(out[j] == doctest::Approx(logistic(pre)).epsilon(1e-15));
    }
}

namespace {

/// Straightforward re-implementation used as the forward oracle.
Vec naive_forward(const DenseNet& net, Vec a) {
    for (const auto& l : net.layers) {
        Vec y(l.weight.cols, 0.0);
        for (std::size_t j = 0; j < l.weight.cols; ++j) {
            double s = l.bias[j];
            for (std::size_t i = 0; i < l.weight.rows; ++i) s += a[i] * l.weight.at(i, j);
            y[j] = apply_activation(l.act, s);
        }
        a = std::move(y);
    }
    return a;
}

} // namespace

TEST_CASE("mlp: forward matches an independent oracle") {
    Rng rng(10);
    DenseNet net = make_dense_net({6, 11, 8}, {Activation::Relu, Activation::Sigmoid}, rng);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec z = rng.normal_vec(6);
        const Vec a = mlp_forward_vec(net, z);
        const Vec b = naive_forward(net, z);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
}

TEST_CASE("mlp vjp: zero cotangent zeroes every gradient") {
    Rng rng(11);
    DenseNet net = make_dense_net({4, 8, 9}, {Activation::Relu, Activation::Sigmoid}, rng);
    const auto g = mlp_vjp_vec(net, rng.normal_vec(4), Vec(9, 0.0));
    CHECK(norm(g.latent) == 0.0);
    for (const auto& w : g.weights)
        for (double v : w.data) CHECK(v == 0.0);
    for (const auto& b : g.biases)
        for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("mlp vjp: latent and parameter gradients match finite differences") {
    Rng rng(12);
    DenseNet net = make_dense_net({4, 8, 9}, {Activation::Relu, Activation::Sigmoid}, rng);
    const Vec z = rng.normal_vec(4);
    Vec ct = rng.normal_vec(9);
    const auto g = mlp_vjp_vec(net, z, ct);

    const auto fd_latent = testutil::finite_difference_gradient(
        [&](const Vec& q) { return dot(mlp_forward_vec(net, q), ct); }, z, 1e-5);
    CHECK(testutil::gradient_rel_error(g.latent, fd_latent) <= 1e-4);

    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const auto fd_w = testutil::finite_difference_gradient(
            [&](const Vec& q) {
                DenseNet probe = net;
                probe.layers[li].weight.data = q;
                return dot(mlp_forward_vec(probe, z), ct);
            },
            net.layers[li].weight.data, 1e-5);
        CHECK(testutil::gradient_rel_error(g.weights[li].data, fd_w) <= 1e-4);
        const auto fd_b = testutil::finite_difference_gradient(
            [&](const Vec& q) {
                DenseNet probe = net;
                probe.layers[li].bias = q;
                return dot(mlp_forward_vec(probe, z), ct);
            },
            net.layers[li].bias, 1e-5);
        CHECK(testutil::gradient_rel_error(g.biases[li], fd_b) <= 1e-4);
    }
}

TEST_CASE("mlp vjp: relu dead units block gradient flow") {
    Rng rng(13);
    DenseNet net = make_dense_net({3, 4, 2}, {Activation::Relu, Activation::Sigmoid}, rng);
    net.layers[0].bias[1] = -100.0; // unit 1 strictly negative for moderate inputs
    const Vec z{0.2, -0.3, 0.5};
    const auto g = mlp_vjp_vec(net, z, Vec{1.0, -1.0});
    CHECK(g.biases[0][1] == 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g.weights[0].at(i, 1) == 0.0);
}

TEST_CASE("dense net: DGN1 round-trip is byte-identical") {
    Rng rng(14);
    DenseNet net = make_dense_net({10, 32, 16}, {Activation::Relu, Activation::Sigmoid}, rng);
    const std::string p1 = "net_a.dgn", p2 = "net_b.dgn";
    save_dense_net(net, p1);
    const DenseNet back = load_dense_net(p1);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        CHECK(back.layers[i].weight == net.layers[i].weight);
        CHECK(back.layers[i].bias == net.layers[i].bias);
        CHECK(back.layers[i].act == net.layers[i].act);
    }
    save_dense_net(back, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("dense net: loader rejects bad magic") {
    const std::string path = "bad_magic.dgn";
    std::ofstream(path, std::ios::binary) << "NOPE1234";
    CHECK_THROWS_AS(load_dense_net(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_SUITE_END();
