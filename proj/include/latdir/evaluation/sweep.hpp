#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "latdir/evaluation/estimators.hpp"
#include "latdir/factor/encoding.hpp"
#include "latdir/numerics/parallel.hpp"
#include "latdir/numerics/rng.hpp"

namespace latdir {

struct SweepConfig {
    double t_max = 3.0;               // grid spans [-t_max, t_max] in latent units
    std::size_t grid_points = 21;     // odd keeps 0 on the grid
    std::size_t samples_per_t = 64;
    EstimatorKind estimator = EstimatorKind::BarycenterX;
    std::uint64_t seed = 0;

    void validate() const {
        if (grid_points < 2) throw std::invalid_argument("SweepConfig: need at least 2 grid points");
        if (samples_per_t < 2) throw std::invalid_argument("SweepConfig: need at least 2 samples per t");
        if (!(t_max > 0.0)) throw std::invalid_argument("SweepConfig: t_max must be > 0");
    }
};

struct SweepRow {
    double t = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t samples = 0;   // estimates that were defined
    std::size_t excluded = 0;  // undefined estimates at this t
    bool flagged = false;      // all estimates undefined
};

struct SweepResult {
    std::vector<SweepRow> rows;
    EstimatorKind estimator = EstimatorKind::BarycenterX;
    std::string generator_id; // provenance labels, filled by the caller
    std::string model_id;

    /// Average std over the central half of the grid: the per-beta summary
    /// number of the disentanglement comparison.
    double mean_std_central() const {
        const std::size_t n = rows.size();
        const std::size_t lo = n / 4;
        const std::size_t hi = n - n / 4;
        double s = 0.0;
        std::size_t count = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            if (rows[i].flagged) continue;
            s += rows[i].stddev;
            ++count;
        }
        return count ? s / static_cast<double>(count) : 0.0;
    }
};

/// The quantitative evaluation protocol: sample latents, replace their
/// u-coordinate by each grid value t, generate, and measure the factor with
/// the estimator; report mean and standard deviation per t. Cells are
/// independent, so sampling fans out over workers with per-sample seeds and
/// a deterministic fold.
inline SweepResult sweep(const GeneratorSpec& gen, const EncodingModel& model, const SweepConfig& cfg) {
    cfg.validate();
    if (model.d() != gen.latent_dim)
        throw std::invalid_argument("sweep: model dimension does not match generator");

    SweepResult result;
    result.estimator = cfg.estimator;
    result.rows.resize(cfg.grid_points);

    std::vector<std::vector<double>> estimates(cfg.grid_points);
    std::vector<std::size_t> excluded(cfg.grid_points, 0);
    for (auto& e : estimates) e.assign(cfg.samples_per_t, std::nan(""));

    const std::size_t cells = cfg.grid_points * cfg.samples_per_t;
    parallel_for(cells, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t cell = lo; cell < hi; ++cell) {
            const std::size_t ti = cell / cfg.samples_per_t;
            const std::size_t si = cell % cfg.samples_per_t;
            const double t = -cfg.t_max + 2.0 * cfg.t_max * static_cast<double>(ti) /
                                              static_cast<double>(cfg.grid_points - 1);
            // one latent per (t, sample) cell, seeded by the sample index so
            // every t sees the same base draws
            Rng rng(cfg.seed, si);
            Latent z = rng.normal_vec(gen.latent_dim);
            const double c = dot(z, model.u);
            axpy(t - c, model.u, z); // z - <z,u>u + t u
            const ImageGrid img = gen.forward(z);
            if (auto est = estimate_factor(img, cfg.estimator)) estimates[ti][si] = *est;
        }
    });

    for (std::size_t ti = 0; ti < cfg.grid_points; ++ti) {
        SweepRow& row = result.rows[ti];
        row.t = -cfg.t_max + 2.0 * cfg.t_max * static_cast<double>(ti) /
                                 static_cast<double>(cfg.grid_points - 1);
        double sum = 0.0;
        std::size_t n = 0;
        for (double e : estimates[ti]) {
            if (std::isnan(e)) continue;
            sum += e;
            ++n;
        }
        row.samples = n;
        row.excluded = cfg.samples_per_t - n;
        if (n == 0) {
            row.flagged = true;
            continue;
        }
        row.mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (double e : estimates[ti]) {
            if (std::isnan(e)) continue;
            var += (e - row.mean) * (e - row.mean);
        }
        row.stddev = std::sqrt(var / static_cast<double>(n));
    }
    return result;
}

inline void export_sweep_csv(const SweepResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_sweep_csv: cannot open " + path);
    out << "t,mean,std,samples,excluded,flagged\n";
    out.precision(17);
    for (const auto& row : r.rows)
        out << row.t << "," << row.mean << "," << row.stddev << "," << row.samples << ","
            << row.excluded << "," << (row.flagged ? 1 : 0) << "\n";
}

} // namespace latdir
