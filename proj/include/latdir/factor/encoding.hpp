#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "latdir/factor/piecewise.hpp"
#include "latdir/inversion/trajectory.hpp"
#include "latdir/numerics/adam.hpp"
#include "latdir/numerics/parallel.hpp"
#include "latdir/numerics/rng.hpp"

namespace latdir {

/// Scalar encoding of one factor of variation: t = g(<u, z>) with a unit
/// direction u and monotone piecewise-linear g.
struct EncodingModel {
    Vec u;
    PiecewiseLinearFn g;

    std::size_t d() const { return u.size(); }
};

/// Predicted factor difference between two latent codes (the trainable
/// quantity: absolute factor values are never observed, only differences).
inline double predict_delta(const EncodingModel& m, const Latent& z0, const Latent& z_t) {
    if (z0.size() != m.d() || z_t.size() != m.d())
        throw std::invalid_argument("predict_delta: dimension mismatch");
    return m.g(dot(m.u, z_t)) - m.g(dot(m.u, z0));
}

struct FitConfig {
    double learning_rate = 0.02;
    double final_lr_fraction = 0.05; // linear decay target; 1 keeps the rate constant
    std::size_t epochs = 800;
    std::size_t batch_size = 64;
    std::size_t knot_count = 17; // odd, so 0 is a knot
    double knot_range = 3.0;     // knots on [-range, range]
    std::size_t restarts = 4;    // independent optimizations; lowest final MSE wins
    std::uint64_t seed = 0;
};

struct FitReport {
    double final_mse = 0.0;
    std::vector<double> epoch_mse;
};

namespace detail {

/// g evaluated from segment increments with the 0-knot anchor applied.
/// increments[j] >= 0 is the value gain across segment j.
struct MonotoneEval {
    const Vec& knots;
    const Vec& increments;
    std::size_t mid; // index of the 0 knot

    double value_at_knot(std::size_t k) const {
        // partial sums are cheap at our knot counts; K ~ 16
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += increments[j];
        double anchor = 0.0;
        for (std::size_t j = 0; j < mid; ++j) anchor += increments[j];
        return acc - anchor;
    }

    /// value, active segment and within-segment weight at point p
    void eval(double p, double& value, std::size_t& seg, double& w) const {
        seg = 0;
        if (p <= knots.front()) {
            w = (p - knots[0]) / (knots[1] - knots[0]); // negative: extrapolation
            seg = 0;
        } else if (p >= knots.back()) {
            seg = knots.size() - 2;
            w = (p - knots[seg]) / (knots[seg + 1] - knots[seg]); // > 1: extrapolation
        } else {
            const auto it = std::upper_bound(knots.begin(), knots.end(), p);
            seg = static_cast<std::size_t>(it - knots.begin()) - 1;
            w = (p - knots[seg]) / (knots[seg + 1] - knots[seg]);
        }
        value = value_at_knot(seg) + w * increments[seg];
    }

    /// d(value)/d(increment j) at the evaluation state (seg, w):
    ///   [j < seg] + w [j == seg] - [j < mid]
    double slope(std::size_t seg) const { return increments[seg] / (knots[seg + 1] - knots[seg]); }
};

} // namespace detail

namespace detail {

/// One optimization run from one initialization seed.
inline EncodingModel fit_once(const TrajectoryDataset& ds, const FitConfig& cfg,
                              std::uint64_t run_seed, FitReport* report) {
    const std::size_t n = ds.records.size();
    const std::size_t d = ds.d;
    const Vec knots = uniform_knots(cfg.knot_count, -cfg.knot_range, cfg.knot_range);
    const std::size_t segs = knots.size() - 1;
    const std::size_t mid = knots.size() / 2;

    // delta-t spans differ wildly between transforms (pixels vs log-zoom);
    // scale the identity-like init so g's range roughly covers the data
    double dt_absmax = 0.0;
    for (const auto& r : ds.records) dt_absmax = std::max(dt_absmax, std::abs(r.delta_t));
    const double init_gain = std::max(dt_absmax / cfg.knot_range, 1e-3);

    Rng rng(run_seed);
    Vec u = rng.normal_vec(d);
    normalize(u);
    Vec raw(segs);
    for (std::size_t j = 0; j < segs; ++j)
        raw[j] = std::sqrt(init_gain * (knots[j + 1] - knots[j]));

    Vec params(d + segs);
    std::copy(u.begin(), u.end(), params.begin());
    std::copy(raw.begin(), raw.end(), params.begin() + static_cast<std::ptrdiff_t>(d));
    AdamState adam(params.size(), cfg.learning_rate);

    Vec increments(segs);
    auto refresh_increments = [&] {
        for (std::size_t j = 0; j < segs; ++j) {
            const double r = params[d + j];
            increments[j] = r * r;
        }
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    const std::size_t batch = std::max<std::size_t>(1, std::min(cfg.batch_size, n));
    if (report) report->epoch_mse.clear();

    Vec grad(params.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // linear learning-rate decay settles the iterate near the optimum
        const double progress = static_cast<double>(epoch) / static_cast<double>(std::max<std::size_t>(1, cfg.epochs - 1));
        adam.learning_rate = cfg.learning_rate * (1.0 - (1.0 - cfg.final_lr_fraction) * progress);
        // seeded Fisher-Yates shuffle
        Rng erng(run_seed, epoch + 1);
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[erng.index(i)]);

        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            refresh_increments();
            detail::MonotoneEval geval{knots, increments, mid};
            std::fill(grad.begin(), grad.end(), 0.0);
            Vec uvec(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
            const double inv_b = 1.0 / static_cast<double>(stop - start);

            for (std::size_t bi = start; bi < stop; ++bi) {
                const auto& rec = ds.records[order[bi]];
                const double p0 = dot(uvec, rec.z0);
                const double p1 = dot(uvec, rec.z_t);
                double g0, g1, w0, w1;
                std::size_t s0, s1;
                geval.eval(p0, g0, s0, w0);
                geval.eval(p1, g1, s1, w1);
                const double err = (g1 - g0) - rec.delta_t;
                const double c = 2.0 * err * inv_b;

                // direction gradient through both projections
                const double k1 = c * geval.slope(s1);
                const double k0 = -c * geval.slope(s0);
                for (std::size_t j = 0; j < d; ++j)
                    grad[j] += k1 * rec.z_t[j] + k0 * rec.z0[j];

                // increment gradients: d(g1-g0)/d(inc j) = [j<s1] + w1[j==s1]
                //                                        - [j<s0] - w0[j==s0]
                // (the anchor terms cancel in the difference)
                for (std::size_t j = 0; j < segs; ++j) {
                    double coeff = 0.0;
                    if (j < s1) coeff += 1.0;
                    if (j == s1) coeff += w1;
                    if (j < s0) coeff -= 1.0;
                    if (j == s0) coeff -= w0;
                    if (coeff != 0.0) grad[d + j] += c * coeff * 2.0 * params[d + j];
                }
            }

            adam_step(adam, params, grad);
            // project the direction back to the unit sphere
            double nn = 0.0;
            for (std::size_t j = 0; j < d; ++j) nn += params[j] * params[j];
            nn = std::sqrt(nn);
            if (nn < 1e-12) throw std::runtime_error("fit: direction collapsed to zero");
            for (std::size_t j = 0; j < d; ++j) params[j] /= nn;
        }

        if (report || epoch + 1 == cfg.epochs) {
            refresh_increments();
            detail::MonotoneEval geval{knots, increments, mid};
            Vec uvec(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
            double mse = 0.0;
            for (const auto& rec : ds.records) {
                double g0, g1, w;
                std::size_t s;
                geval.eval(dot(uvec, rec.z0), g0, s, w);
                geval.eval(dot(uvec, rec.z_t), g1, s, w);
                const double e = (g1 - g0) - rec.delta_t;
                mse += e * e;
            }
            mse /= static_cast<double>(n);
            if (!std::isfinite(mse))
                throw std::runtime_error("fit: non-finite loss at epoch " + std::to_string(epoch));
            if (report) {
                report->epoch_mse.push_back(mse);
                report->final_mse = mse;
            }
        }
    }

    refresh_increments();
    EncodingModel model;
    model.u.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
    normalize(model.u);
    Vec values(knots.size());
    {
        detail::MonotoneEval geval{knots, increments, mid};
        for (std::size_t k = 0; k < knots.size(); ++k) values[k] = geval.value_at_knot(k);
    }
    model.g = make_piecewise_linear(knots, std::move(values));

    // joint sign convention: flip (u, g) together when predictions
    // anti-correlate with the recorded delta-t
    double corr = 0.0;
    for (const auto& rec : ds.records)
        corr += predict_delta(model, rec.z0, rec.z_t) * rec.delta_t;
    if (corr < 0.0) {
        scale(model.u, -1.0);
        Vec flipped(model.g.values.size());
        const std::size_t m = model.g.values.size();
        for (std::size_t i = 0; i < m; ++i) flipped[i] = -model.g.values[m - 1 - i];
        model.g = make_piecewise_linear(model.g.knots, std::move(flipped));
    }
    return model;
}

} // namespace detail

/// Fits (u, g) by Adam on the mean squared error between recorded transform
/// strengths and predicted factor differences. Monotonicity is structural
/// (segment increments are squares of raw parameters), g(0) = 0 holds by
/// construction, and u is renormalized after every step. The fitted pair is
/// flipped jointly at the end if predictions anti-correlate with delta-t.
/// The landscape has decoy basins (nothing ties latent displacement to the
/// transform strength except through g), so several independent restarts run
/// and the lowest final training MSE wins.
inline EncodingModel fit(const TrajectoryDataset& ds, const FitConfig& cfg, FitReport* report = nullptr) {
    const std::size_t n = ds.records.size();
    if (n < 2) throw std::invalid_argument("fit: dataset too small (need >= 2 records)");
    if (cfg.epochs < 1) throw std::invalid_argument("fit: need at least one epoch");
    {
        std::set<double> distinct;
        for (const auto& r : ds.records) distinct.insert(r.delta_t);
        if (distinct.size() < 2) throw std::invalid_argument("fit: distinct delta_t values required");
    }
    const std::size_t restarts = std::max<std::size_t>(1, cfg.restarts);
    std::vector<EncodingModel> models(restarts);
    std::vector<FitReport> reports(restarts);
    std::vector<std::string> errors(restarts);
    parallel_for(restarts, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            try {
                models[r] = detail::fit_once(ds, cfg, stream_seed(cfg.seed, r), &reports[r]);
            } catch (const std::exception& e) {
                errors[r] = e.what();
            }
        }
    });
    std::size_t best = restarts;
    for (std::size_t r = 0; r < restarts; ++r) {
        if (!errors[r].empty()) continue;
        if (best == restarts || reports[r].final_mse < reports[best].final_mse) best = r;
    }
    if (best == restarts) throw std::runtime_error("fit: every restart failed: " + errors[0]);
    if (report) *report = std::move(reports[best]);
    return std::move(models[best]);
}

// --- structured text serialization ------------------------------------------

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline Vec parse_double_list(const std::string& s, const char* what) {
    Vec out;
    std::istringstream is(s);
    double v;
    while (is >> v) out.push_back(v);
    if (out.empty()) throw std::runtime_error(std::string("expected numbers for ") + what);
    return out;
}

} // namespace detail

inline void save_encoding_model(const EncodingModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_encoding_model: cannot open " + path);
    out << "artifact = encoding_model\n";
    out << "d = " << m.d() << "\n";
    out << "u =";
    for (double v : m.u) out << " " << detail::fmt_g17(v);
    out << "\nknots =";
    for (double v : m.g.knots) out << " " << detail::fmt_g17(v);
    out << "\nvalues =";
    for (double v : m.g.values) out << " " << detail::fmt_g17(v);
    out << "\n";
    if (!out) throw std::runtime_error("save_encoding_model: write failed for " + path);
}

inline EncodingModel load_encoding_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_encoding_model: cannot open " + path);
    std::string line;
    std::string u_str, knots_str, values_str;
    std::size_t d = 0;
    bool tagged = false;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        if (key == "artifact") tagged = (val.find("encoding_model") != std::string::npos);
        else if (key == "d") d = static_cast<std::size_t>(std::stoul(val));
        else if (key == "u") u_str = val;
        else if (key == "knots") knots_str = val;
        else if (key == "values") values_str = val;
    }
    if (!tagged) throw std::runtime_error("load_encoding_model: not an encoding model file: " + path);
    EncodingModel m;
    m.u = detail::parse_double_list(u_str, "u");
    if (d == 0 || m.u.size() != d)
        throw std::runtime_error("load_encoding_model: u length does not match d");
    const double n = norm(m.u);
    if (std::abs(n - 1.0) > 1e-9)
        throw std::runtime_error("load_encoding_model: direction is not unit norm");
    Vec knots = detail::parse_double_list(knots_str, "knots");
    Vec values = detail::parse_double_list(values_str, "values");
    m.g = make_piecewise_linear(std::move(knots), std::move(values));
    return m;
}

/// CSV of (s, g(s)) samples for plotting.
inline void export_model_csv(const EncodingModel& m, const std::string& path, std::size_t samples = 121) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_model_csv: cannot open " + path);
    out << "s,g\n";
    out.precision(17);
    const double lo = m.g.min_knot(), hi = m.g.max_knot();
    for (std::size_t i = 0; i < samples; ++i) {
        const double s = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
        out << s << "," << m.g(s) << "\n";
    }
}

} // namespace latdir
