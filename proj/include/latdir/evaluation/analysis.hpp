#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "latdir/inversion/invert.hpp"
#include "latdir/inversion/transform.hpp"
#include "latdir/numerics/dft2.hpp"
#include "latdir/numerics/pca.hpp"

namespace latdir {

struct TrajectoryPcaReport {
    std::vector<std::array<double, 2>> trajectory; // projected image path
    std::array<double, 2> chord_start{};
    std::array<double, 2> chord_end{};
    double curvature = 0.0; // max point-to-chord distance / chord length
    bool degenerate = false;
};

/// Projects the pixel-space path of an image under a transform sweep onto its
/// top-2 principal axes. The curvature score separates transforms that are
/// linear in pixel space (brightness) from those that curve hard enough to
/// starve gradient descent (translation, rotation).
inline TrajectoryPcaReport pixel_trajectory_pca(const ImageGrid& image, TransformKind kind,
                                                const std::vector<double>& t_grid) {
    if (t_grid.size() < 2)
        throw std::invalid_argument("pixel_trajectory_pca: need at least 2 grid points");

    std::vector<Vec> points;
    points.reserve(t_grid.size());
    for (double t : t_grid) {
        const MaskedImage m = transform_apply(image, {kind, t});
        // invalid pixels read as background for the pixel-space path
        Vec v = m.image.values;
        points.push_back(std::move(v));
    }

    TrajectoryPcaReport rep;
    bool all_equal = true;
    for (std::size_t i = 1; i < points.size() && all_equal; ++i) all_equal = points[i] == points[0];
    if (all_equal) {
        rep.degenerate = true;
        rep.trajectory.assign(points.size(), {0.0, 0.0});
        return rep;
    }

    if (points.size() == 2) {
        // two points: the path is its own chord
        rep.trajectory = {{0.0, 0.0}, {norm(sub(points[1], points[0])), 0.0}};
        rep.chord_start = rep.trajectory.front();
        rep.chord_end = rep.trajectory.back();
        return rep;
    }

    const Pca2D pca = pca_project_2d(points);
    rep.degenerate = pca.degenerate;
    rep.trajectory = pca.projections;
    rep.chord_start = rep.trajectory.front();
    rep.chord_end = rep.trajectory.back();

    const double cx = rep.chord_end[0] - rep.chord_start[0];
    const double cy = rep.chord_end[1] - rep.chord_start[1];
    const double chord_len = std::hypot(cx, cy);
    if (chord_len < 1e-12) {
        // closed path: score by spread relative to the path extent instead
        double max_dev = 0.0;
        for (const auto& p : rep.trajectory)
            max_dev = std::max(max_dev, std::hypot(p[0] - rep.chord_start[0], p[1] - rep.chord_start[1]));
        double span = 0.0;
        for (std::size_t i = 1; i < rep.trajectory.size(); ++i)
            span += std::hypot(rep.trajectory[i][0] - rep.trajectory[i - 1][0],
                               rep.trajectory[i][1] - rep.trajectory[i - 1][1]);
        rep.curvature = span > 0.0 ? max_dev / span : 0.0;
        return rep;
    }
    double max_dist = 0.0;
    for (const auto& p : rep.trajectory) {
        const double d = std::abs(cx * (p[1] - rep.chord_start[1]) - cy * (p[0] - rep.chord_start[0])) / chord_len;
        max_dist = std::max(max_dist, d);
    }
    rep.curvature = max_dist / chord_len;
    return rep;
}

inline void export_trajectory_pca_csv(const TrajectoryPcaReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_trajectory_pca_csv: cannot open " + path);
    out << "p1,p2,kind\n";
    out.precision(17);
    for (const auto& p : rep.trajectory) out << p[0] << "," << p[1] << ",trajectory\n";
    out << rep.chord_start[0] << "," << rep.chord_start[1] << ",chord\n";
    out << rep.chord_end[0] << "," << rep.chord_end[1] << ",chord\n";
}

/// Norm of the latent-space loss gradient at z0 against transforms of the
/// z0 image, per grid value. Shows the vanishing-gradient regime: once the
/// transformed object no longer overlaps the generated one, the pixel-space
/// gradient is orthogonal to the generator's tangent space and the pullback
/// collapses.
inline std::vector<double> gradient_norm_profile(const GeneratorSpec& gen, const Latent& z0,
                                                 TransformKind kind, const std::vector<double>& t_grid,
                                                 const LossSpec& loss) {
    check_latent(gen, z0, "gradient_norm_profile");
    const ImageGrid base = gen.forward(z0);
    std::vector<double> norms;
    norms.reserve(t_grid.size());
    for (double t : t_grid) {
        const MaskedImage target = transform_apply(base, {kind, t});
        if (target.empty_mask()) {
            norms.push_back(std::nan(""));
            continue;
        }
        const LossValue lv = recon_loss(loss, base, target);
        norms.push_back(norm(gen.vjp(z0, lv.cotangent)));
    }
    return norms;
}

/// Fraction of spectral energy above the Nyquist/4 radial frequency: a
/// sharpness proxy that directly measures how much high-frequency content an
/// inversion kept.
inline double spectral_sharpness(const ImageGrid& image) {
    const Spectrum s = dft2(image);
    const double total = spectrum_energy(s);
    if (total <= 0.0) return 0.0;
    const double cut = 0.125; // Nyquist is 0.5 cycles/pixel
    double high = 0.0;
    for (std::size_t v = 0; v < s.height; ++v) {
        for (std::size_t u = 0; u < s.width; ++u) {
            double fv = static_cast<double>(v) / static_cast<double>(s.height);
            double fu = static_cast<double>(u) / static_cast<double>(s.width);
            if (fv > 0.5) fv -= 1.0;
            if (fu > 0.5) fu -= 1.0;
            if (std::hypot(fu, fv) >= cut) high += std::norm(s.at(v, u));
        }
    }
    return high / total;
}

struct LossComparisonRow {
    std::size_t target_index = 0;
    std::string loss_name;     // "mse" or "freq_weighted"
    double sigma = 0.0;        // 0 for mse
    double final_mse = 0.0;    // plain mse of reconstruction vs target
    double sharpness = 0.0;    // spectral sharpness of the reconstruction
    double final_loss = 0.0;   // value of the loss that was optimized
};

/// Inverts each target under mse and under the frequency-weighted loss for
/// each sigma, and scores every reconstruction by plain mse plus the
/// sharpness proxy.
inline std::vector<LossComparisonRow> loss_comparison(const GeneratorSpec& gen,
                                                      const std::vector<ImageGrid>& targets,
                                                      const std::vector<double>& sigmas,
                                                      const InversionConfig& config,
                                                      const Latent& z_init) {
    if (targets.empty()) throw std::invalid_argument("loss_comparison: no targets");
    std::vector<LossComparisonRow> rows;
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const MaskedImage target = full_mask(targets[ti]);
        auto run = [&](const LossSpec& spec, const char* name, double sigma) {
            const InversionResult res = invert(gen, target, spec, config, z_init);
            const ImageGrid recon = gen.forward(res.z);
            LossComparisonRow row;
            row.target_index = ti;
            row.loss_name = name;
            row.sigma = sigma;
            row.final_loss = res.loss;
            row.final_mse = recon_loss(LossSpec::mse(), recon, target).loss;
            row.sharpness = spectral_sharpness(recon);
            rows.push_back(std::move(row));
        };
        run(LossSpec::mse(), "mse", 0.0);
        for (double s : sigmas) run(LossSpec::freq_weighted(s), "freq_weighted", s);
    }
    return rows;
}

inline void export_loss_comparison_csv(const std::vector<LossComparisonRow>& rows,
                                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_loss_comparison_csv: cannot open " + path);
    out << "target,loss,sigma,final_mse,sharpness,final_loss\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.target_index << "," << r.loss_name << "," << r.sigma << "," << r.final_mse << ","
            << r.sharpness << "," << r.final_loss << "\n";
}

} // namespace latdir
