#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <cstring>
#include <sstream>

#include "latdir/cli/artifacts.hpp"
#include "latdir/cli/config.hpp"
#include "latdir/cli/stages.hpp"

using namespace latdir;

TEST_SUITE_BEGIN("cli");

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kSmallTrajConfig = R"(
command = gen-trajectories
seed = 42
output = cli_test.trj

[generator]
kind = sprite
d = 8
height = 32
width = 32
r_min = 4
r_max = 7

[trajectories]
count = 2
steps = 2
max_t = 4
iterations = 60

[target]
transform = translate_x
)";

} // namespace

TEST_CASE("parse_config: minimal sweep config fills documented defaults") {
    const std::string text = "command = sweep\nmodel = m.txt\noutput = out.csv\n";
    const RunConfig rc = parse_config(text);
    CHECK(rc.command == Command::Sweep);
    CHECK(rc.sweep.grid_points == 21);
    CHECK(rc.sweep.samples_per_t == 64);
    CHECK(rc.sweep.estimator == EstimatorKind::BarycenterX);
    CHECK(rc.trajectories.steps == 10);
    CHECK(rc.trajectories.keep_fraction == 0.9);
    CHECK(rc.inversion.learning_rate == 0.1);
    CHECK(rc.vae.learning_rate == 5e-4);
    CHECK(rc.vae.batch_size == 128);
    CHECK(rc.betas == std::vector<double>{1.0, 5.0, 10.0, 20.0});
}

TEST_CASE("parse_config: unknown keys are rejected by name and line") {
    const std::string text =
        "command = sweep\nmodel = m.txt\noutput = o.csv\n\n[loss]\nsigmma = 3\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sigmma") != std::string::npos);
        CHECK(msg.find("line 6") != std::string::npos);
    }
}

TEST_CASE("parse_config: malformed values name the offending key") {
    CHECK_THROWS_AS(parse_config("command = sweep\nmodel = m\noutput = o\n[sweep]\ngrid = many\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("command = nonsense\noutput = o\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = sweep\n"), ConfigError); // missing model/output
    CHECK_THROWS_AS(parse_config("command = sweep\ncommand = sweep\nmodel = m\noutput = o\n"),
                    ConfigError); // duplicate key
}

TEST_CASE("parse_config: serialize/parse round-trip is stable") {
    const RunConfig rc = parse_config(kSmallTrajConfig);
    const RunConfig rt = parse_config(rc.serialize());
    CHECK(rt == rc);
    CHECK(rt.serialize() == rc.serialize());
}

TEST_CASE("run gen-trajectories: records bounded by S*N, manifest validates") {
    RunConfig rc = parse_config(kSmallTrajConfig);
    std::ostringstream log;
    run(rc, log);
    const Artifact art = load_artifact("cli_test.trj");
    REQUIRE(std::holds_alternative<TrajectoryDataset>(art));
    const auto& ds = std::get<TrajectoryDataset>(art);
    CHECK(ds.records.size() <= 4);
    CHECK(ds.records.size() >= 2);
    const ArtifactManifest m = load_manifest("cli_test.trj");
    CHECK(m.kind == "trajectories");
    CHECK(m.config_snapshot == rc.serialize());
    CHECK(log.str().find("gen-trajectories") != std::string::npos);
    std::remove("cli_test.trj");
    std::remove("cli_test.trj.manifest");
}

TEST_CASE("run: same config and seed produce byte-identical artifacts") {
    RunConfig rc = parse_config(kSmallTrajConfig);
    std::ostringstream log;
    rc.output_path = "det_a.trj";
    run(rc, log);
    rc.output_path = "det_b.trj";
    run(rc, log);
    CHECK(file_bytes("det_a.trj").substr(0, 200) != ""); // sanity
    // artifact bytes differ only in the embedded config snapshot (output path);
    // compare the records by reloading, and the full bytes after a rename-free rerun
    rc.output_path = "det_a.trj";
    run(rc, log);
    const std::string again = file_bytes("det_a.trj");
    rc.output_path = "det_a.trj";
    run(rc, log);
    CHECK(file_bytes("det_a.trj") == again);
    const auto a = std::get<TrajectoryDataset>(load_artifact("det_a.trj"));
    const auto b = std::get<TrajectoryDataset>(load_artifact("det_b.trj"));
    CHECK(a.records == b.records);
    for (const char* f : {"det_a.trj", "det_a.trj.manifest", "det_b.trj", "det_b.trj.manifest"})
        std::remove(f);
}

TEST_CASE("pipeline: fit-direction and sweep manifests chain by content hash") {
    std::ostringstream log;
    RunConfig traj = parse_config(kSmallTrajConfig);
    traj.trajectories.num_trajectories = 4;
    traj.trajectories.steps = 3;
    traj.output_path = "chain.trj";
    run(traj, log);

    RunConfig fitc;
    fitc.command = Command::FitDirection;
    fitc.input_path = "chain.trj";
    fitc.output_path = "chain.model";
    fitc.fit.epochs = 60;
    run(fitc, log);

    RunConfig sweepc;
    sweepc.command = Command::Sweep;
    sweepc.model_path = "chain.model";
    sweepc.output_path = "chain.csv";
    sweepc.generator = traj.generator;
    sweepc.sweep.samples_per_t = 4;
    sweepc.sweep.grid_points = 5;
    run(sweepc, log);

    const ArtifactManifest fit_m = load_manifest("chain.model");
    const ArtifactManifest sweep_m = load_manifest("chain.csv");
    REQUIRE(fit_m.inputs.size() == 1);
    CHECK(fit_m.inputs[0].first == "trajectories");
    CHECK(fit_m.inputs[0].second == content_hash_hex("chain.trj"));
    bool found = false;
    for (const auto& [name, hash] : sweep_m.inputs)
        if (name == "model" && hash == fit_m.content_hash) found = true;
    CHECK(found);
    for (const char* f : {"chain.trj", "chain.trj.manifest", "chain.model",
                          "chain.model.manifest", "chain.csv", "chain.csv.manifest"})
        std::remove(f);
}

TEST_CASE("load_artifact: dispatches on magic and rejects corruption") {
    // corrupted magic
    {
        std::ofstream out("bad.bin", std::ios::binary);
        out << "XXXX garbage";
    }
    CHECK_THROWS_AS(load_artifact("bad.bin"), std::runtime_error);
    std::remove("bad.bin");

    // truncated TRJ1
    {
        std::ofstream out("trunc.trj", std::ios::binary);
        out << "TRJ1";
    }
    CHECK_THROWS_AS(load_artifact("trunc.trj"), std::runtime_error);
    std::remove("trunc.trj");

    // TRJ1 whose record payload is cut short relative to the declared count
    {
        TrajectoryDataset ds;
        ds.d = 4;
        Rng rng(1);
        ds.records.push_back({rng.normal_vec(4), rng.normal_vec(4), 1.0, 0.5});
        ds.records.push_back({rng.normal_vec(4), rng.normal_vec(4), 2.0, 0.5});
        save_trajectories(ds, "cut.trj");
        std::string bytes = file_bytes("cut.trj");
        bytes.resize(bytes.size() / 2);
        std::ofstream out("cut.trj", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_artifact("cut.trj"), std::runtime_error);
    std::remove("cut.trj");

    // non-finite latent violates the load invariant
    {
        TrajectoryDataset ds;
        ds.d = 2;
        ds.records.push_back({Vec{1.0, 2.0}, Vec{3.0, 4.0}, 1.0, 0.5});
        ds.records.push_back({Vec{1.0, 2.0}, Vec{3.0, 4.0}, 2.0, 0.5});
        save_trajectories(ds, "nan.trj");
        std::string bytes = file_bytes("nan.trj");
        const double bad = std::numeric_limits<double>::quiet_NaN();
        std::memcpy(bytes.data() + 4 + 4 + 4 + 8, &bad, sizeof(double));
        std::ofstream out("nan.trj", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_artifact("nan.trj"), std::runtime_error);
    std::remove("nan.trj");
}

TEST_CASE("manifest: tampering with the artifact is detected on load") {
    RunConfig rc = parse_config(kSmallTrajConfig);
    rc.output_path = "tamper.trj";
    std::ostringstream log;
    run(rc, log);
    {
        std::ofstream out("tamper.trj", std::ios::binary | std::ios::app);
        out << "extra";
    }
    CHECK_THROWS_AS(load_manifest("tamper.trj"), std::runtime_error);
    std::remove("tamper.trj");
    std::remove("tamper.trj.manifest");
}

TEST_CASE("synth-data stage: SPR1 artifact loads back through the dispatcher") {
    RunConfig rc;
    rc.command = Command::SynthData;
    rc.output_path = "stage.spr";
    rc.dataset.count = 5;
    rc.dataset.height = 16;
    rc.dataset.width = 16;
    rc.dataset.r_min = 3.0;
    rc.dataset.r_max = 5.0;
    std::ostringstream log;
    run(rc, log);
    const Artifact art = load_artifact("stage.spr");
    REQUIRE(std::holds_alternative<std::vector<ImageGrid>>(art));
    CHECK(std::get<std::vector<ImageGrid>>(art).size() == 5);
    std::remove("stage.spr");
    std::remove("stage.spr.manifest");
}

TEST_CASE("resample stage: self target leaves coordinates unchanged") {
    // build a model artifact via a quick fit
    std::ostringstream log;
    RunConfig traj = parse_config(kSmallTrajConfig);
    traj.trajectories.num_trajectories = 4;
    traj.trajectories.steps = 3;
    traj.output_path = "rs.trj";
    run(traj, log);
    RunConfig fitc;
    fitc.command = Command::FitDirection;
    fitc.input_path = "rs.trj";
    fitc.output_path = "rs.model";
    fitc.fit.epochs = 60;
    run(fitc, log);

    RunConfig rs;
    rs.command = Command::Resample;
    rs.model_path = "rs.model";
    rs.output_path = "rs.csv";
    rs.resample.target = "self";
    rs.resample.count = 50;
    run(rs, log);

    std::ifstream in("rs.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "coord_before,coord_after,factor_before,factor_after");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        double c0, c1;
        char comma;
        std::istringstream ls(line);
        ls >> c0 >> comma >> c1;
        CHECK(std::abs(c1 - c0) <= 1e-6);
        ++rows;
    }
    CHECK(rows == 50);
    for (const char* f : {"rs.trj", "rs.trj.manifest", "rs.model", "rs.model.manifest", "rs.csv",
                          "rs.csv.manifest"})
        std::remove(f);
}

TEST_SUITE_END();
