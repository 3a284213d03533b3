#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "latdir/inversion/invert.hpp"
#include "latdir/inversion/transform.hpp"
#include "latdir/numerics/binio.hpp"
#include "latdir/numerics/parallel.hpp"
#include "latdir/numerics/rng.hpp"

namespace latdir {

enum class FilterRule : std::uint32_t { Threshold = 0, KeepFraction = 1 };

struct TrajectoryConfig {
    std::size_t num_trajectories = 20;   // S
    std::size_t steps = 10;              // N
    double max_t = 16.0;                 // T: strongest transform parameter
    FilterRule filter = FilterRule::KeepFraction;
    double threshold = 1e-3;             // Theta, Threshold mode only
    double keep_fraction = 0.9;          // KeepFraction mode only
    std::size_t per_step_iterations = 0; // 0: use the inversion config as-is
};

struct TrajectoryStep {
    double delta_t = 0.0;
    Latent z;
    double loss = 0.0;
    bool skipped = false; // empty mask at this step; recursion continued past it
};

/// Solves the warm-started chain: z_n inverts the transform of the *original*
/// image at strength delta_t[n], initialized at z_{n-1}. Walking the target
/// through intermediate transforms keeps each solve close to its optimum,
/// which is what makes strong transforms reachable at all.
inline std::vector<TrajectoryStep> recursive_trajectory(const GeneratorSpec& gen, const Latent& z0,
                                                        TransformKind kind,
                                                        const std::vector<double>& deltas,
                                                        const LossSpec& loss,
                                                        const InversionConfig& config) {
    check_latent(gen, z0, "recursive_trajectory");
    if (deltas.empty()) throw std::invalid_argument("recursive_trajectory: no steps");
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (!(deltas[i] > deltas[i - 1]))
            throw std::invalid_argument("recursive_trajectory: step parameters must increase strictly");

    const ImageGrid original = gen.forward(z0);
    std::vector<TrajectoryStep> out;
    out.reserve(deltas.size());
    Latent z_prev = z0;
    for (double dt : deltas) {
        TrajectoryStep step;
        step.delta_t = dt;
        const MaskedImage target = transform_apply(original, {kind, dt});
        if (target.empty_mask()) {
            step.skipped = true;
            step.z = z_prev;
            out.push_back(std::move(step));
            continue;
        }
        InversionResult res = invert(gen, target, loss, config, z_prev);
        step.z = res.z;
        step.loss = res.loss;
        out.push_back(step);
        z_prev = std::move(res.z);
    }
    return out;
}

struct TrajectoryRecord {
    Latent z0;
    Latent z_t;
    double delta_t = 0.0;
    double loss = 0.0; // final reconstruction loss; kept for filtering and audit

    bool operator==(const TrajectoryRecord&) const = default;
};

struct TrajectoryDataset {
    std::size_t d = 0;
    TransformKind kind = TransformKind::TranslateX;
    std::vector<TrajectoryRecord> records;
    std::string config_snapshot;

    bool operator==(const TrajectoryDataset&) const = default;
};

namespace detail {

inline std::string trajectory_snapshot(TransformKind kind, const TrajectoryConfig& tc,
                                       const LossSpec& loss, const InversionConfig& ic,
                                       std::uint64_t seed) {
    std::ostringstream os;
    os << "transform = " << transform_name(kind) << "\n"
       << "trajectories = " << tc.num_trajectories << "\n"
       << "steps = " << tc.steps << "\n"
       << "max_t = " << tc.max_t << "\n"
       << "filter = " << (tc.filter == FilterRule::Threshold ? "threshold" : "keep_fraction") << "\n"
       << "threshold = " << tc.threshold << "\n"
       << "keep_fraction = " << tc.keep_fraction << "\n"
       << "loss = " << (loss.kind == LossKind::Mse ? "mse" : "freq_weighted") << "\n"
       << "sigma = " << loss.sigma << "\n"
       << "learning_rate = " << ic.learning_rate << "\n"
       << "iterations = " << (tc.per_step_iterations ? tc.per_step_iterations : ic.max_iterations) << "\n"
       << "seed = " << seed << "\n";
    return os.str();
}

} // namespace detail

/// Loss-based record filter. Threshold mode keeps records with loss strictly
/// below the bound; keep-fraction mode keeps the best floor(fraction * n)
/// records, ties broken by position, original order preserved.
inline std::vector<TrajectoryRecord> filter_records(std::vector<TrajectoryRecord> records,
                                                    FilterRule rule, double threshold,
                                                    double keep_fraction) {
    if (rule == FilterRule::Threshold) {
        std::erase_if(records, [&](const TrajectoryRecord& r) { return !(r.loss < threshold); });
        return records;
    }
    const std::size_t total = records.size();
    const auto keep =
        static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(total) + 1e-9));
    if (keep >= total) return records;
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].loss < records[b].loss; });
    std::vector<std::uint8_t> survives(total, 0);
    for (std::size_t k = 0; k < keep; ++k) survives[idx[k]] = 1;
    std::vector<TrajectoryRecord> kept;
    kept.reserve(keep);
    for (std::size_t i = 0; i < total; ++i)
        if (survives[i]) kept.push_back(std::move(records[i]));
    return kept;
}

/// Algorithm: draw S standard-normal starts, walk each through N regularly
/// spaced transform strengths on (0, T] with warm starts, then filter the
/// collected (z0, z_dt, dt) records by reconstruction loss. Trajectories are
/// independent and fan out across workers; assembly is in trajectory order,
/// so the result is deterministic for a given seed.
inline TrajectoryDataset build_dataset(const GeneratorSpec& gen, TransformKind kind,
                                       const TrajectoryConfig& tc, const LossSpec& loss,
                                       const InversionConfig& inv_config, std::uint64_t seed) {
    if (tc.num_trajectories < 1 || tc.steps < 1)
        throw std::invalid_argument("build_dataset: need S >= 1 and N >= 1");
    if (tc.filter == FilterRule::KeepFraction &&
        !(tc.keep_fraction > 0.0 && tc.keep_fraction <= 1.0))
        throw std::invalid_argument("build_dataset: keep fraction outside (0, 1]");

    InversionConfig ic = inv_config;
    if (tc.per_step_iterations > 0) ic.max_iterations = tc.per_step_iterations;

    std::vector<double> deltas(tc.steps);
    for (std::size_t n = 1; n <= tc.steps; ++n)
        deltas[n - 1] = tc.max_t * static_cast<double>(n) / static_cast<double>(tc.steps);

    std::vector<std::vector<TrajectoryRecord>> per_traj(tc.num_trajectories);
    parallel_for(tc.num_trajectories, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng(seed, i);
            const Latent z0 = rng.normal_vec(gen.latent_dim);
            const auto steps = recursive_trajectory(gen, z0, kind, deltas, loss, ic);
            for (const auto& s : steps) {
                if (s.skipped) continue;
                per_traj[i].push_back({z0, s.z, s.delta_t, s.loss});
            }
        }
    });

    TrajectoryDataset ds;
    ds.d = gen.latent_dim;
    ds.kind = kind;
    ds.config_snapshot = detail::trajectory_snapshot(kind, tc, loss, ic, seed);
    for (auto& t : per_traj)
        for (auto& r : t) ds.records.push_back(std::move(r));

    ds.records = filter_records(std::move(ds.records), tc.filter, tc.threshold, tc.keep_fraction);
    if (ds.records.size() < 2)
        throw std::runtime_error("build_dataset: fewer than 2 records survived filtering");
    return ds;
}

/// Concatenates per-category datasets so one shared direction can be fitted
/// across all of them. Dimensions and transform kinds must match.
inline TrajectoryDataset merge_datasets(const std::vector<TrajectoryDataset>& parts) {
    if (parts.empty()) throw std::invalid_argument("merge_datasets: nothing to merge");
    TrajectoryDataset out;
    out.d = parts.front().d;
    out.kind = parts.front().kind;
    for (const auto& p : parts) {
        if (p.d != out.d || p.kind != out.kind)
            throw std::invalid_argument("merge_datasets: mismatched dimension or transform kind");
        out.records.insert(out.records.end(), p.records.begin(), p.records.end());
        out.config_snapshot += p.config_snapshot;
    }
    return out;
}

// --- TRJ1 binary serialization (little-endian) ------------------------------

inline void save_trajectories(const TrajectoryDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_trajectories: cannot open " + path);
    out.write("TRJ1", 4);
    detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ds.d));
    detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ds.kind));
    detail::write_raw<std::uint64_t>(out, ds.records.size());
    for (const auto& r : ds.records) {
        if (r.z0.size() != ds.d || r.z_t.size() != ds.d)
            throw std::invalid_argument("save_trajectories: record dimension mismatch");
        out.write(reinterpret_cast<const char*>(r.z0.data()),
                  static_cast<std::streamsize>(ds.d * sizeof(double)));
        out.write(reinterpret_cast<const char*>(r.z_t.data()),
                  static_cast<std::streamsize>(ds.d * sizeof(double)));
        detail::write_raw<double>(out, r.delta_t);
        detail::write_raw<double>(out, r.loss);
    }
    detail::write_raw<std::uint64_t>(out, ds.config_snapshot.size());
    out.write(ds.config_snapshot.data(), static_cast<std::streamsize>(ds.config_snapshot.size()));
    if (!out) throw std::runtime_error("save_trajectories: write failed for " + path);
}

inline TrajectoryDataset load_trajectories(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_trajectories: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "TRJ1")
        throw std::runtime_error("load_trajectories: bad magic in " + path);
    TrajectoryDataset ds;
    ds.d = detail::read_raw<std::uint32_t>(in, "latent dim");
    const auto kind = detail::read_raw<std::uint32_t>(in, "transform kind");
    if (kind > 4) throw std::runtime_error("load_trajectories: unknown transform code");
    ds.kind = static_cast<TransformKind>(kind);
    if (ds.d < 2) throw std::runtime_error("load_trajectories: invariant violation: d < 2");
    const auto count = detail::read_raw<std::uint64_t>(in, "record count");
    ds.records.resize(count);
    for (auto& r : ds.records) {
        r.z0.resize(ds.d);
        r.z_t.resize(ds.d);
        in.read(reinterpret_cast<char*>(r.z0.data()), static_cast<std::streamsize>(ds.d * sizeof(double)));
        in.read(reinterpret_cast<char*>(r.z_t.data()), static_cast<std::streamsize>(ds.d * sizeof(double)));
        if (!in) throw std::runtime_error("load_trajectories: truncated record in " + path);
        r.delta_t = detail::read_raw<double>(in, "delta_t");
        r.loss = detail::read_raw<double>(in, "loss");
        if (!all_finite(r.z0) || !all_finite(r.z_t))
            throw std::runtime_error("load_trajectories: invariant violation: non-finite latent");
    }
    const auto snap_len = detail::read_raw<std::uint64_t>(in, "snapshot length");
    ds.config_snapshot.resize(snap_len);
    in.read(ds.config_snapshot.data(), static_cast<std::streamsize>(snap_len));
    if (!in) throw std::runtime_error("load_trajectories: truncated snapshot in " + path);
    return ds;
}

/// CSV export for inspection: one row per record, latents inline.
inline void export_trajectories_csv(const TrajectoryDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_trajectories_csv: cannot open " + path);
    out << "delta_t,loss";
    for (std::size_t j = 0; j < ds.d; ++j) out << ",z0_" << j;
    for (std::size_t j = 0; j < ds.d; ++j) out << ",zt_" << j;
    out << "\n";
    out.precision(17);
    for (const auto& r : ds.records) {
        out << r.delta_t << "," << r.loss;
        for (double v : r.z0) out << "," << v;
        for (double v : r.z_t) out << "," << v;
        out << "\n";
    }
    if (!out) throw std::runtime_error("export_trajectories_csv: write failed for " + path);
}

} // namespace latdir
