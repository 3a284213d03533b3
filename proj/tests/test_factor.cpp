#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "latdir/factor/density.hpp"
#include "latdir/factor/encoding.hpp"
#include "latdir/factor/parts.hpp"

using namespace latdir;

TEST_SUITE_BEGIN("factor");

namespace {

/// Model with g = identity on the knot grid and direction e1.
EncodingModel identity_model(std::size_t d, std::size_t knots = 17, double range = 3.0) {
    EncodingModel m;
    m.u.assign(d, 0.0);
    m.u[0] = 1.0;
    const Vec k = uniform_knots(knots, -range, range);
    m.g = make_piecewise_linear(k, k);
    return m;
}

/// Model sampling g(s) = erf(s/sqrt(2))/2 = Phi(s) - 1/2 on a fine grid.
EncodingModel erf_model(std::size_t d, std::size_t knots = 65) {
    EncodingModel m;
    m.u.assign(d, 0.0);
    m.u[0] = 1.0;
    m.g = sample_piecewise_linear(uniform_knots(knots, -3.0, 3.0),
                                  [](double s) { return std_normal_cdf(s) - 0.5; });
    return m;
}

/// Linear ground truth u = e1, g = identity. The small isotropic perturbation
/// on z_t matters: with exactly z_t = z0 + dt e1 the model is unidentifiable
/// (any u1 with transfer slope 1/u1 predicts dt perfectly), which mirrors the
/// inversion noise real trajectory data carries.
TrajectoryDataset linear_ground_truth_dataset(std::size_t n, std::size_t d, Rng& rng,
                                              double noise = 0.02) {
    TrajectoryDataset ds;
    ds.d = d;
    for (std::size_t i = 0; i < n; ++i) {
        TrajectoryRecord r;
        r.z0 = rng.normal_vec(d);
        r.delta_t = rng.uniform(-2.0, 2.0);
        r.z_t = r.z0;
        r.z_t[0] += r.delta_t;
        for (auto& v : r.z_t) v += noise * rng.normal();
        r.loss = 0.0;
        ds.records.push_back(std::move(r));
    }
    return ds;
}

} // namespace

TEST_CASE("piecewise linear: anchored at zero, monotone validation, inverse") {
    const Vec knots = uniform_knots(5, -2.0, 2.0);
    const auto g = make_piecewise_linear(knots, Vec{1.0, 2.0, 4.0, 4.5, 5.0});
    CHECK(g(0.0) == 0.0);
    CHECK(g(-2.0) == doctest::Approx(-3.0));
    CHECK(g(2.0) == doctest::Approx(1.0));
    CHECK(g(3.0) == doctest::Approx(1.5)); // boundary-slope extrapolation
    CHECK(g.inverse(0.5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_piecewise_linear(knots, Vec{0.0, 2.0, 1.0, 3.0, 4.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_piecewise_linear(Vec{-1.0, 1.0, 2.0}, Vec{0.0, 1.0, 2.0}),
                    std::invalid_argument); // no knot at 0
    CHECK_THROWS_AS(uniform_knots(4), std::invalid_argument);
}

TEST_CASE("piecewise linear: inverse is consistent on strictly increasing functions") {
    const auto m = erf_model(4);
    for (double s = -2.9; s <= 2.9; s += 0.037)
        CHECK(m.g.inverse(m.g(s)) == doctest::Approx(s).epsilon(1e-9));
}

TEST_CASE("predict_delta: zero for equal codes, exact for the linear case, antisymmetric") {
    const auto m = identity_model(6);
    Rng rng(1);
    const Latent z = rng.normal_vec(6);
    CHECK(predict_delta(m, z, z) == 0.0);

    Latent z3 = z;
    z3[0] += 3.0;
    CHECK(predict_delta(m, z, z3) == doctest::Approx(3.0).epsilon(1e-12));

    const Latent a = rng.normal_vec(6), b = rng.normal_vec(6);
    CHECK(predict_delta(m, a, b) == -predict_delta(m, b, a));
    CHECK_THROWS_AS(predict_delta(m, Latent(4, 0.0), z), std::invalid_argument);
}

TEST_CASE("fit: recovers a linear ground truth direction and transfer function") {
    Rng rng(2);
    const auto ds = linear_ground_truth_dataset(6000, 8, rng);
    FitConfig cfg;
    cfg.seed = 3;
    cfg.epochs = 350;
    cfg.batch_size = 256;
    FitReport report;
    const auto m = fit(ds, cfg, &report);
    Vec e1(8, 0.0);
    e1[0] = 1.0;
    CHECK(std::abs(dot(m.u, e1)) >= 0.999);
    double worst = 0.0;
    for (double s = -2.0; s <= 2.0; s += 0.05) {
        const double sign = m.u[0] > 0 ? 1.0 : -1.0;
        worst = std::max(worst, std::abs(sign * m.g(sign * s) - s));
    }
    CHECK(worst <= 0.01);
    CHECK(report.final_mse <= 1e-3); // floor is the injected noise variance
    CHECK(std::abs(norm(m.u) - 1.0) <= 1e-9);
    CHECK(m.g(0.0) == 0.0);
    for (std::size_t i = 0; i + 1 < m.g.values.size(); ++i)
        CHECK(m.g.values[i + 1] >= m.g.values[i]);
}

TEST_CASE("fit: rejects degenerate datasets") {
    Rng rng(4);
    TrajectoryDataset tiny;
    tiny.d = 4;
    tiny.records.push_back({rng.normal_vec(4), rng.normal_vec(4), 1.0, 0.0});
    CHECK_THROWS_AS(fit(tiny, FitConfig{}), std::invalid_argument);

    TrajectoryDataset same;
    same.d = 4;
    for (int i = 0; i < 10; ++i)
        same.records.push_back({rng.normal_vec(4), rng.normal_vec(4), 0.0, 0.0});
    CHECK_THROWS_AS(fit(same, FitConfig{}), std::invalid_argument);
}

TEST_CASE("factor_density: identity transfer gives the standard normal density") {
    const auto m = identity_model(4);
    CHECK(factor_density(m, 0.0) == doctest::Approx(0.39894).epsilon(1e-4));
    const double t = 1.3;
    CHECK(factor_density(m, t) == doctest::Approx(std_normal_pdf(t)).epsilon(1e-9));
}

TEST_CASE("factor_density: the erf transfer induces the uniform density on (-1/2, 1/2)") {
    const auto m = erf_model(4, 129);
    // compare at segment midpoints: a piecewise-linear g carries the segment
    // average slope, which matches the normal density at the midpoint to O(h^2)
    for (std::size_t i = 0; i + 1 < m.g.knots.size(); ++i) {
        const double s_mid = 0.5 * (m.g.knots[i] + m.g.knots[i + 1]);
        if (std::abs(s_mid) > 2.6) continue;
        const double dens = factor_density(m, m.g(s_mid));
        CHECK(dens == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("factor_density: integrates to one") {
    for (const auto& m : {identity_model(4), erf_model(4)}) {
        const double lo = m.g(-6.0), hi = m.g(6.0);
        const double integral = testutil::simpson([&](double t) { return factor_density(m, t); },
                                                  lo + 1e-12, hi - 1e-12, 20000);
        CHECK(std::abs(integral - 1.0) <= 1e-3);
    }
}

TEST_CASE("factor_density: flat segment raises the infinite-density flag") {
    EncodingModel m;
    m.u = Vec{1.0, 0.0};
    // values anchored at the 0-knot: {-1, 0, 0, 0, 1}; the plateau sits at t = 0
    m.g = make_piecewise_linear(uniform_knots(5, -2.0, 2.0), Vec{0.0, 1.0, 1.0, 1.0, 2.0});
    CHECK(std::isinf(factor_density(m, 0.0)));
}

TEST_CASE("round-trip density: histogram of g(s) matches factor_density in L1") {
    const auto m = erf_model(4, 65);
    Rng rng(5);
    const int n = 100000;
    const int bins = 50;
    const double lo = -0.5, hi = 0.5;
    std::vector<double> hist(bins, 0.0);
    for (int i = 0; i < n; ++i) {
        const double t = m.g(rng.normal());
        const int b = std::min(bins - 1, std::max(0, static_cast<int>((t - lo) / (hi - lo) * bins)));
        hist[b] += 1.0;
    }
    const double bin_w = (hi - lo) / bins;
    double l1 = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double emp = hist[b] / (n * bin_w);
        const double mid = lo + (b + 0.5) * bin_w;
        const double theo = factor_density(m, mid);
        l1 += std::abs(emp - theo) * bin_w;
    }
    CHECK(l1 <= 0.05);
}

TEST_CASE("resample: the model's own density is a fixed point") {
    const auto m = erf_model(8, 33);
    const LatentResampler resampler(m, TargetDensity::self(m));
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        const Latent z = rng.normal_vec(8);
        const Latent out = resampler.resample(z);
        for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(out[j] - z[j]) <= 1e-6);
    }
}

TEST_CASE("resample: only the u-component changes") {
    const auto m = erf_model(8, 33);
    const LatentResampler resampler(m, TargetDensity::uniform(-0.4, 0.4));
    Rng rng(7);
    const Latent z = rng.normal_vec(8);
    const Latent out = resampler.resample(z);
    const Vec diff = sub(out, z);
    const double along = dot(diff, m.u);
    Vec residual = diff;
    axpy(-along, m.u, residual);
    CHECK(norm(residual) <= 1e-12 * std::max(1.0, norm(diff)));
}

TEST_CASE("resample: uniform target yields a uniform measured factor") {
    const auto m = erf_model(8, 65);
    const LatentResampler resampler(m, TargetDensity::uniform(-0.5, 0.5));
    Rng rng(8);
    std::vector<double> factors;
    const int n = 10000;
    factors.reserve(n);
    for (int i = 0; i < n; ++i) {
        const Latent z = resampler.resample(rng.normal_vec(8));
        factors.push_back(m.g(dot(z, m.u)));
    }
    const double ks = testutil::ks_statistic(
        factors, [](double t) { return std::min(1.0, std::max(0.0, t + 0.5)); });
    CHECK(ks <= 0.05);
}

TEST_CASE("resample: rejects targets with interior holes or bad normalization") {
    const auto m = identity_model(4);
    TargetDensity holey;
    holey.density = [](double t) {
        const double a = std::abs(t);
        return (a < 0.5 || (a > 1.0 && a < 2.10974)) ? 0.3029 : 0.0; // normalized, hole inside
    };
    CHECK_THROWS_AS(LatentResampler(m, holey), std::invalid_argument);

    TargetDensity unnormalized = TargetDensity::uniform(-0.4, 0.4);
    auto base = unnormalized.density;
    unnormalized.density = [base](double t) { return 2.0 * base(t); };
    CHECK_THROWS_AS(LatentResampler(m, unnormalized), std::invalid_argument);
}

TEST_CASE("resample_latent: one-shot wrapper agrees with the table") {
    const auto m = erf_model(4, 33);
    const auto target = TargetDensity::uniform(-0.45, 0.45);
    const LatentResampler table(m, target);
    Rng rng(9);
    const Latent z = rng.normal_vec(4);
    CHECK(resample_latent(m, z, target) == table.resample(z));
}

TEST_CASE("direction_part_norms: canonical, uniform, and random directions") {
    Vec e1(8, 0.0);
    e1[0] = 1.0;
    const auto halves = direction_part_norms(e1, {{0, 4}, {4, 8}});
    CHECK(halves[0] == 1.0);
    CHECK(halves[1] == 0.0);

    Vec uniform(8, 1.0 / std::sqrt(8.0));
    const auto quarters = direction_part_norms(uniform, equal_partition(8, 4));
    for (double q : quarters) CHECK(q == doctest::Approx(0.25).epsilon(1e-12));

    Rng rng(10);
    Vec u = rng.normal_vec(9);
    normalize(u);
    const auto parts = direction_part_norms(u, equal_partition(9, 3));
    double total = 0.0;
    for (double p : parts) total += p;
    CHECK(std::abs(total - 1.0) <= 1e-12);

    CHECK_THROWS_AS(direction_part_norms(u, {{0, 4}, {5, 9}}), std::invalid_argument);
    CHECK_THROWS_AS(direction_part_norms(u, {{0, 4}}), std::invalid_argument);
}

TEST_CASE("encoding model: text round-trip preserves the model and the bytes") {
    Rng rng(11);
    TrajectoryDataset ds = linear_ground_truth_dataset(60, 5, rng);
    FitConfig cfg;
    cfg.epochs = 40;
    const auto m = fit(ds, cfg);
    const std::string p1 = "model_a.txt", p2 = "model_b.txt";
    save_encoding_model(m, p1);
    const auto back = load_encoding_model(p1);
    CHECK(back.u == m.u);
    CHECK(back.g.knots == m.g.knots);
    CHECK(back.g.values == m.g.values);
    save_encoding_model(back, p2);
    std::ifstream f1(p1), f2(p2);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_SUITE_END();
