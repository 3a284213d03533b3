#pragma once

#include <iostream>
#include <string>

#include "latdir/cli/artifacts.hpp"
#include "latdir/evaluation/analysis.hpp"
#include "latdir/evaluation/beta_study.hpp"
#include "latdir/evaluation/sweep.hpp"
#include "latdir/factor/density.hpp"

namespace latdir {

inline GeneratorSpec build_generator(const GeneratorConfig& g) {
    if (g.kind == "sprite") {
        return sprite_generator(make_sprite_world(g.d, g.direction_seed, g.height, g.width, g.shape,
                                                  g.tau, g.r_min, g.r_max));
    }
    DenseNet net = load_dense_net(g.decoder_path);
    return decoder_generator(std::move(net), g.height, g.width);
}

namespace stages {

inline void synth_data(const RunConfig& rc, std::ostream& log) {
    const auto images = synth_dataset(rc.dataset);
    save_sprite_dataset(images, rc.output_path);
    write_manifest(rc.output_path, "sprite_dataset", rc);
    log << "synth-data: wrote " << images.size() << " images (" << rc.dataset.height << "x"
        << rc.dataset.width << ") to " << rc.output_path << "\n";
}

inline void train_vae_stage(const RunConfig& rc, std::ostream& log) {
    const auto images = load_sprite_dataset(rc.input_path);
    const auto result = train_vae(rc.vae, images);
    save_dense_net(result.decoder, rc.output_path);
    const auto in_hash = content_hash_hex(rc.input_path);
    write_manifest(rc.output_path, "dense_net", rc, {{"dataset", in_hash}});
    if (!rc.aux_output.empty()) {
        export_train_curve_csv(result.curve, rc.aux_output);
        write_manifest(rc.aux_output, "train_curve", rc, {{"dataset", in_hash}});
    }
    const double final_loss = result.curve.empty() ? 0.0 : result.curve.back().loss;
    log << "train-vae: beta " << rc.vae.beta << ", " << rc.vae.steps << " steps, final loss "
        << final_loss << ", decoder to " << rc.output_path << "\n";
}

inline void gen_trajectories(const RunConfig& rc, std::ostream& log) {
    const GeneratorSpec gen = build_generator(rc.generator);
    const TransformKind kind = transform_from_name(rc.target.transform);
    TrajectoryDataset ds =
        build_dataset(gen, kind, rc.trajectories, rc.loss, rc.inversion, rc.seed);
    ds.config_snapshot = rc.serialize();
    save_trajectories(ds, rc.output_path);
    std::vector<std::pair<std::string, std::string>> inputs;
    if (rc.generator.kind == "dense")
        inputs.emplace_back("decoder", content_hash_hex(rc.generator.decoder_path));
    write_manifest(rc.output_path, "trajectories", rc, inputs);
    if (!rc.aux_output.empty()) export_trajectories_csv(ds, rc.aux_output);
    log << "gen-trajectories: " << ds.records.size() << " records (" << transform_name(kind)
        << ", T = " << rc.trajectories.max_t << ") to " << rc.output_path << "\n";
}

inline void fit_direction(const RunConfig& rc, std::ostream& log) {
    const TrajectoryDataset ds = load_trajectories(rc.input_path);
    FitReport report;
    const EncodingModel model = fit(ds, rc.fit, &report);
    save_encoding_model(model, rc.output_path);
    write_manifest(rc.output_path, "encoding_model", rc,
                   {{"trajectories", content_hash_hex(rc.input_path)}});
    if (!rc.aux_output.empty()) {
        std::ofstream curve(rc.aux_output);
        curve << "epoch,mse\n";
        curve.precision(17);
        for (std::size_t i = 0; i < report.epoch_mse.size(); ++i)
            curve << i << "," << report.epoch_mse[i] << "\n";
    }
    log << "fit-direction: " << ds.records.size() << " records, final mse " << report.final_mse
        << ", model to " << rc.output_path << "\n";
}

inline void sweep_stage(const RunConfig& rc, std::ostream& log) {
    const GeneratorSpec gen = build_generator(rc.generator);
    const EncodingModel model = load_encoding_model(rc.model_path);
    SweepResult res = sweep(gen, model, rc.sweep);
    res.generator_id = rc.generator.kind == "dense" ? rc.generator.decoder_path : "sprite";
    res.model_id = rc.model_path;
    export_sweep_csv(res, rc.output_path);
    std::vector<std::pair<std::string, std::string>> inputs{
        {"model", content_hash_hex(rc.model_path)}};
    if (rc.generator.kind == "dense")
        inputs.emplace_back("decoder", content_hash_hex(rc.generator.decoder_path));
    write_manifest(rc.output_path, "sweep", rc, inputs);
    log << "sweep: " << res.rows.size() << " grid points, central mean std "
        << res.mean_std_central() << ", table to " << rc.output_path << "\n";
}

inline void resample_stage(const RunConfig& rc, std::ostream& log) {
    const EncodingModel model = load_encoding_model(rc.model_path);
    const TargetDensity target = rc.resample.target == "self"
                                     ? TargetDensity::self(model)
                                     : TargetDensity::uniform(rc.resample.lo, rc.resample.hi);
    const LatentResampler resampler(model, target);
    Rng rng(rc.seed);
    std::ofstream out(rc.output_path);
    if (!out) throw std::runtime_error("cannot open " + rc.output_path);
    out << "coord_before,coord_after,factor_before,factor_after\n";
    out.precision(17);
    for (std::size_t i = 0; i < rc.resample.count; ++i) {
        const Latent z = rng.normal_vec(model.d());
        const Latent r = resampler.resample(z);
        const double c0 = dot(z, model.u), c1 = dot(r, model.u);
        out << c0 << "," << c1 << "," << model.g(c0) << "," << model.g(c1) << "\n";
    }
    out.close();
    write_manifest(rc.output_path, "resample", rc, {{"model", content_hash_hex(rc.model_path)}});
    log << "resample: " << rc.resample.count << " latents to " << rc.resample.target
        << " target, table to " << rc.output_path << "\n";
}

inline void invert_one(const RunConfig& rc, std::ostream& log) {
    const GeneratorSpec gen = build_generator(rc.generator);
    MaskedImage target;
    if (!rc.target.image_path.empty()) {
        target = full_mask(read_pgm(rc.target.image_path));
    } else {
        Rng rng(rc.target.z_seed);
        const ImageGrid base = gen.forward(rng.normal_vec(gen.latent_dim));
        target = transform_apply(base, {transform_from_name(rc.target.transform), rc.target.amount});
    }
    Rng rng(rc.seed);
    const Latent z_init = rng.normal_vec(gen.latent_dim);
    const InversionResult res = invert(gen, target, rc.loss, rc.inversion, z_init);

    write_pgm(gen.forward(res.z), rc.output_path);
    write_manifest(rc.output_path, "reconstruction", rc);
    if (!rc.aux_output.empty()) {
        std::ofstream curve(rc.aux_output);
        curve << "iteration,loss\n";
        curve.precision(17);
        for (std::size_t i = 0; i < res.curve.size(); ++i) curve << i << "," << res.curve[i] << "\n";
    }
    log << "invert-one: final loss " << res.loss << " after " << res.iterations
        << " iterations, reconstruction to " << rc.output_path << "\n";
}

inline void analyze_curvature(const RunConfig& rc, std::ostream& log) {
    const GeneratorSpec gen = build_generator(rc.generator);
    Rng rng(rc.curvature.z_seed);
    const Latent z0 = rng.normal_vec(gen.latent_dim);
    const ImageGrid base = gen.forward(z0);
    const TransformKind kind = transform_from_name(rc.curvature.transform);

    std::vector<double> grid;
    for (std::size_t i = 0; i < rc.curvature.grid_points; ++i)
        grid.push_back(rc.curvature.t_max * static_cast<double>(i) /
                       static_cast<double>(rc.curvature.grid_points - 1));

    const auto pca = pixel_trajectory_pca(base, kind, grid);
    export_trajectory_pca_csv(pca, rc.output_path);
    write_manifest(rc.output_path, "curvature", rc);
    if (!rc.aux_output.empty()) {
        const auto norms = gradient_norm_profile(gen, z0, kind, grid, rc.loss);
        std::ofstream out(rc.aux_output);
        out << "t,gradient_norm\n";
        out.precision(17);
        for (std::size_t i = 0; i < grid.size(); ++i) out << grid[i] << "," << norms[i] << "\n";
    }
    log << "analyze-curvature: " << rc.curvature.transform << " curvature score " << pca.curvature
        << ", trajectory to " << rc.output_path << "\n";
}

inline void compare_losses(const RunConfig& rc, std::ostream& log) {
    const GeneratorSpec gen = build_generator(rc.generator);
    std::vector<ImageGrid> targets;
    for (std::size_t i = 0; i < rc.compare.targets; ++i) {
        Rng rng(rc.compare.target_seed, i);
        ImageGrid img = gen.forward(rng.normal_vec(gen.latent_dim));
        if (rc.compare.checker_amplitude > 0.0) {
            // out-of-range texture: period-4 checker the generator cannot emit
            for (std::size_t y = 0; y < img.height; ++y)
                for (std::size_t x = 0; x < img.width; ++x) {
                    const bool on = ((x / 2) + (y / 2)) % 2 == 0;
                    const double delta = on ? rc.compare.checker_amplitude : -rc.compare.checker_amplitude;
                    img.at(y, x) = std::min(1.0, std::max(0.0, img.at(y, x) + delta));
                }
        }
        targets.push_back(std::move(img));
    }
    InversionConfig inv = rc.inversion;
    inv.max_iterations = rc.compare.iterations;
    const auto rows = loss_comparison(gen, targets, rc.compare.sigmas, inv,
                                      Latent(gen.latent_dim, 0.0));
    export_loss_comparison_csv(rows, rc.output_path);
    write_manifest(rc.output_path, "loss_comparison", rc);
    log << "compare-losses: " << rows.size() << " rows over " << targets.size() << " targets to "
        << rc.output_path << "\n";
}

inline void beta_study(const RunConfig& rc, std::ostream& log) {
    BetaStudyConfig cfg;
    cfg.betas = rc.betas;
    cfg.dataset = rc.dataset;
    cfg.vae = rc.vae;
    cfg.transform = transform_from_name(rc.target.transform);
    cfg.trajectories = rc.trajectories;
    cfg.loss = rc.loss;
    cfg.inversion = rc.inversion;
    cfg.fit = rc.fit;
    cfg.sweep = rc.sweep;
    const auto entries = beta_comparison(cfg);
    std::ofstream out(rc.output_path);
    if (!out) throw std::runtime_error("cannot open " + rc.output_path);
    out << "beta,mean_std,final_train_loss,initial_train_loss,trajectory_records\n";
    out.precision(17);
    for (const auto& e : entries)
        out << e.beta << "," << e.mean_std << "," << e.final_train_loss << ","
            << e.initial_train_loss << "," << e.trajectory_records << "\n";
    out.close();
    write_manifest(rc.output_path, "beta_study", rc);
    log << "beta-study:";
    for (const auto& e : entries) log << " beta " << e.beta << " mean-std " << e.mean_std << ";";
    log << " table to " << rc.output_path << "\n";
}

} // namespace stages

/// Executes the configured stage; writes artifacts plus manifests and prints
/// a one-line summary. Throws ConfigError for usage problems and
/// runtime_error for stage failures; the CLI maps those to exit codes.
inline void run(const RunConfig& rc, std::ostream& log = std::cout) {
    switch (rc.command) {
        case Command::SynthData: stages::synth_data(rc, log); return;
        case Command::TrainVae: stages::train_vae_stage(rc, log); return;
        case Command::GenTrajectories: stages::gen_trajectories(rc, log); return;
        case Command::FitDirection: stages::fit_direction(rc, log); return;
        case Command::Sweep: stages::sweep_stage(rc, log); return;
        case Command::Resample: stages::resample_stage(rc, log); return;
        case Command::InvertOne: stages::invert_one(rc, log); return;
        case Command::AnalyzeCurvature: stages::analyze_curvature(rc, log); return;
        case Command::CompareLosses: stages::compare_losses(rc, log); return;
        case Command::BetaStudy: stages::beta_study(rc, log); return;
    }
    throw ConfigError("unhandled command");
}

} // namespace latdir
