// latdir: latent-direction toolkit driver.
//
// One binary, one subcommand per pipeline stage. Each stage reads a
// structured-text config file; command-line flags only override paths and
// the seed, so the config file remains the full record of an experiment.

#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "latdir/cli/stages.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw latdir::ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-direction toolkit: find and use latent directions that "
                 "control continuous factors of a differentiable generator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_override;
    std::string input_override;
    std::string model_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;

    const std::vector<std::string> commands = {
        "synth-data",      "train-vae", "gen-trajectories", "fit-direction", "sweep",
        "resample",        "invert-one", "analyze-curvature", "compare-losses", "beta-study"};

    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("config", config_path, "structured-text config file")->required();
        sub->add_option("--output", output_override, "override the primary output path");
        sub->add_option("--input", input_override, "override the primary input path");
        sub->add_option("--model", model_override, "override the encoding-model path");
        sub->add_option("--seed", seed_override, "override the global seed")
            ->each([&](const std::string&) { seed_given = true; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        latdir::RunConfig rc = latdir::parse_config(slurp(config_path));
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub != latdir::command_name(rc.command))
            throw latdir::ConfigError("config declares command \"" +
                                      std::string(latdir::command_name(rc.command)) +
                                      "\" but the \"" + sub + "\" subcommand was invoked");
        if (!output_override.empty()) rc.output_path = output_override;
        if (!input_override.empty()) rc.input_path = input_override;
        if (!model_override.empty()) rc.model_path = model_override;
        if (seed_given) rc.seed = seed_override;
        latdir::run(rc);
        return 0;
    } catch (const latdir::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
