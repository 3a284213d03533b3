#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "latdir/diffgen/sprite.hpp"
#include "latdir/evaluation/estimators.hpp"
#include "latdir/evaluation/sweep.hpp"
#include "latdir/factor/encoding.hpp"
#include "latdir/inversion/trajectory.hpp"
#include "latdir/vae/dataset.hpp"
#include "latdir/vae/train.hpp"

namespace latdir {

/// Config and usage problems: exit code 1 territory.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cfgdetail {

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
    mutable bool consumed = false;
};

/// Sectioned key-value document: "[section]" headers, "key = value" lines,
/// '#' comments. Every key must be consumed by the typed readers; leftovers
/// are reported with their line number.
class Doc {
public:
    static Doc parse(const std::string& text) {
        Doc doc;
        std::istringstream in(text);
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string t = trim(line);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                if (section.empty())
                    throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            Entry e;
            e.section = section;
            e.key = trim(t.substr(0, eq));
            e.value = trim(t.substr(eq + 1));
            e.line = lineno;
            if (e.key.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
            for (const auto& prev : doc.entries_)
                if (prev.section == e.section && prev.key == e.key)
                    throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key \"" +
                                      qualified(e) + "\"");
            doc.entries_.push_back(std::move(e));
        }
        return doc;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        for (const auto& e : entries_) {
            if (e.section == section && e.key == key) {
                e.consumed = true;
                return e.value;
            }
        }
        return std::nullopt;
    }

    std::string require(const std::string& section, const std::string& key) const {
        if (auto v = get(section, key)) return *v;
        throw ConfigError("missing required key \"" + qualified_name(section, key) + "\"");
    }

    void check_all_consumed() const {
        for (const auto& e : entries_)
            if (!e.consumed)
                throw ConfigError("unknown key \"" + qualified(e) + "\" at config line " +
                                  std::to_string(e.line));
    }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }
    static std::string qualified(const Entry& e) { return qualified_name(e.section, e.key); }
    static std::string qualified_name(const std::string& s, const std::string& k) {
        return s.empty() ? k : s + "." + k;
    }

    std::vector<Entry> entries_;
};

inline double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key \"" + what + "\": expected a number, got \"" + s + "\"");
    }
}

inline std::uint64_t to_u64(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key \"" + what + "\": expected a non-negative integer, got \"" + s + "\"");
    }
}

inline bool to_bool(const std::string& s, const std::string& what) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("key \"" + what + "\": expected true/false, got \"" + s + "\"");
}

inline std::vector<double> to_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(to_double(tok, what));
    if (out.empty()) throw ConfigError("key \"" + what + "\": expected a list of numbers");
    return out;
}

inline std::vector<std::size_t> to_size_list(const std::string& s, const std::string& what) {
    std::vector<std::size_t> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(static_cast<std::size_t>(to_u64(tok, what)));
    if (out.empty()) throw ConfigError("key \"" + what + "\": expected a list of integers");
    return out;
}

/// Scoped reader with defaults.
struct Section {
    const Doc& doc;
    std::string name;

    std::string str(const std::string& key, const std::string& def) const {
        return doc.get(name, key).value_or(def);
    }
    std::string require(const std::string& key) const { return doc.require(name, key); }
    double num(const std::string& key, double def) const {
        if (auto v = doc.get(name, key)) return to_double(*v, qual(key));
        return def;
    }
    std::size_t size(const std::string& key, std::size_t def) const {
        if (auto v = doc.get(name, key)) return static_cast<std::size_t>(to_u64(*v, qual(key)));
        return def;
    }
    std::uint64_t u64(const std::string& key, std::uint64_t def) const {
        if (auto v = doc.get(name, key)) return to_u64(*v, qual(key));
        return def;
    }
    bool flag(const std::string& key, bool def) const {
        if (auto v = doc.get(name, key)) return to_bool(*v, qual(key));
        return def;
    }
    std::string qual(const std::string& key) const { return name.empty() ? key : name + "." + key; }
};

} // namespace cfgdetail

enum class Command : std::uint32_t {
    SynthData,
    TrainVae,
    GenTrajectories,
    FitDirection,
    Sweep,
    Resample,
    InvertOne,
    AnalyzeCurvature,
    CompareLosses,
    BetaStudy,
};

inline const char* command_name(Command c) {
    switch (c) {
        case Command::SynthData: return "synth-data";
        case Command::TrainVae: return "train-vae";
        case Command::GenTrajectories: return "gen-trajectories";
        case Command::FitDirection: return "fit-direction";
        case Command::Sweep: return "sweep";
        case Command::Resample: return "resample";
        case Command::InvertOne: return "invert-one";
        case Command::AnalyzeCurvature: return "analyze-curvature";
        case Command::CompareLosses: return "compare-losses";
        case Command::BetaStudy: return "beta-study";
    }
    return "?";
}

inline Command command_from_name(const std::string& s) {
    for (auto c : {Command::SynthData, Command::TrainVae, Command::GenTrajectories,
                   Command::FitDirection, Command::Sweep, Command::Resample, Command::InvertOne,
                   Command::AnalyzeCurvature, Command::CompareLosses, Command::BetaStudy})
        if (s == command_name(c)) return c;
    throw ConfigError("unknown command \"" + s + "\"");
}

/// Generator selection: the analytic sprite world or a saved dense decoder.
struct GeneratorConfig {
    std::string kind = "sprite"; // "sprite" | "dense"
    // sprite parameters
    std::size_t d = 16;
    std::size_t height = 64;
    std::size_t width = 64;
    SpriteShape shape = SpriteShape::Disc;
    double tau = 1.5;
    double r_min = 6.0;
    double r_max = 16.0;
    std::uint64_t direction_seed = 7;
    // dense parameters
    std::string decoder_path;
};

struct TargetSynthConfig {
    std::string image_path;       // PGM target; empty means synthesize from the generator
    std::uint64_t z_seed = 1;     // latent draw for the synthesized target
    std::string transform = "translate_x";
    double amount = 0.0;          // transform parameter applied to the base image
};

struct ResampleConfig {
    std::string target = "uniform"; // "uniform" | "self"
    double lo = -0.5;
    double hi = 0.5;
    std::size_t count = 1000;
};

struct CurvatureConfig {
    std::string transform = "translate_x";
    double t_max = 20.0;
    std::size_t grid_points = 21;
    std::uint64_t z_seed = 1;
};

struct CompareConfig {
    std::vector<double> sigmas{1.0, 3.0, 5.0, 8.0};
    std::size_t iterations = 400;
    std::size_t targets = 1;
    std::uint64_t target_seed = 3;
    double checker_amplitude = 0.12; // out-of-range texture added to targets
};

/// Fully-typed run description. Every stage block carries its defaults, so a
/// minimal config is just a command plus paths.
struct RunConfig {
    Command command = Command::Sweep;
    std::uint64_t seed = 1;
    std::string input_path;   // primary input artifact
    std::string model_path;   // encoding model (sweep/resample)
    std::string output_path;  // primary output artifact
    std::string aux_output;   // secondary output (curves, reports)

    GeneratorConfig generator;
    SpriteDatasetSpec dataset;
    VaeConfig vae;
    TrajectoryConfig trajectories;
    LossSpec loss = LossSpec::freq_weighted(3.0);
    InversionConfig inversion;
    FitConfig fit;
    SweepConfig sweep;
    ResampleConfig resample;
    TargetSynthConfig target;
    CurvatureConfig curvature;
    CompareConfig compare;
    std::vector<double> betas{1.0, 5.0, 10.0, 20.0};

    std::string serialize() const;
    bool operator==(const RunConfig& o) const { return serialize() == o.serialize(); }
};

namespace cfgdetail {

inline void read_generator(const Doc& doc, GeneratorConfig& g) {
    Section s{doc, "generator"};
    g.kind = s.str("kind", g.kind);
    if (g.kind != "sprite" && g.kind != "dense")
        throw ConfigError("generator.kind must be \"sprite\" or \"dense\"");
    g.d = s.size("d", g.d);
    g.height = s.size("height", g.height);
    g.width = s.size("width", g.width);
    const std::string shape = s.str("shape", g.shape == SpriteShape::Disc ? "disc" : "square");
    if (shape == "disc") g.shape = SpriteShape::Disc;
    else if (shape == "square") g.shape = SpriteShape::Square;
    else throw ConfigError("generator.shape must be \"disc\" or \"square\"");
    g.tau = s.num("tau", g.tau);
    g.r_min = s.num("r_min", g.r_min);
    g.r_max = s.num("r_max", g.r_max);
    g.direction_seed = s.u64("direction_seed", g.direction_seed);
    g.decoder_path = s.str("decoder", g.decoder_path);
    if (g.kind == "dense" && g.decoder_path.empty())
        throw ConfigError("generator.decoder path is required when generator.kind = dense");
}

inline void read_dataset(const Doc& doc, SpriteDatasetSpec& d) {
    Section s{doc, "dataset"};
    d.height = s.size("height", d.height);
    d.width = s.size("width", d.width);
    d.x_lo = s.num("x_lo", d.x_lo);
    d.x_hi = s.num("x_hi", d.x_hi);
    d.y_lo = s.num("y_lo", d.y_lo);
    d.y_hi = s.num("y_hi", d.y_hi);
    d.r_min = s.num("r_min", d.r_min);
    d.r_max = s.num("r_max", d.r_max);
    d.hard_edge = s.flag("hard_edge", d.hard_edge);
    d.tau = s.num("tau", d.tau);
    d.count = s.size("count", d.count);
    d.seed = s.u64("seed", d.seed);
}

inline void read_vae(const Doc& doc, VaeConfig& v) {
    Section s{doc, "vae"};
    v.beta = s.num("beta", v.beta);
    v.latent_dim = s.size("latent_dim", v.latent_dim);
    if (auto h = doc.get("vae", "hidden")) v.hidden = to_size_list(*h, "vae.hidden");
    v.learning_rate = s.num("learning_rate", v.learning_rate);
    v.batch_size = s.size("batch_size", v.batch_size);
    v.steps = s.size("steps", v.steps);
    v.seed = s.u64("seed", v.seed);
}

inline void read_trajectories(const Doc& doc, TrajectoryConfig& t) {
    Section s{doc, "trajectories"};
    t.num_trajectories = s.size("count", t.num_trajectories);
    t.steps = s.size("steps", t.steps);
    t.max_t = s.num("max_t", t.max_t);
    const std::string f = s.str("filter", t.filter == FilterRule::Threshold ? "threshold" : "keep_fraction");
    if (f == "threshold") t.filter = FilterRule::Threshold;
    else if (f == "keep_fraction") t.filter = FilterRule::KeepFraction;
    else throw ConfigError("trajectories.filter must be \"threshold\" or \"keep_fraction\"");
    t.threshold = s.num("theta", t.threshold);
    t.keep_fraction = s.num("keep_fraction", t.keep_fraction);
    t.per_step_iterations = s.size("iterations", t.per_step_iterations);
}

inline void read_loss(const Doc& doc, LossSpec& l) {
    Section s{doc, "loss"};
    const std::string kind = s.str("kind", l.kind == LossKind::Mse ? "mse" : "freq_weighted");
    const double sigma = s.num("sigma", l.sigma);
    if (kind == "mse") l = LossSpec::mse();
    else if (kind == "freq_weighted") l = LossSpec::freq_weighted(sigma);
    else throw ConfigError("loss.kind must be \"mse\" or \"freq_weighted\"");
}

inline void read_inversion(const Doc& doc, InversionConfig& i) {
    Section s{doc, "inversion"};
    i.learning_rate = s.num("learning_rate", i.learning_rate);
    i.max_iterations = s.size("iterations", i.max_iterations);
    i.projection_radius = s.num("radius", i.projection_radius);
    i.tolerance = s.num("tolerance", i.tolerance);
    i.seed = s.u64("seed", i.seed);
}

inline void read_fit(const Doc& doc, FitConfig& f) {
    Section s{doc, "fit"};
    f.learning_rate = s.num("learning_rate", f.learning_rate);
    f.final_lr_fraction = s.num("final_lr_fraction", f.final_lr_fraction);
    f.epochs = s.size("epochs", f.epochs);
    f.batch_size = s.size("batch_size", f.batch_size);
    f.knot_count = s.size("knots", f.knot_count);
    f.knot_range = s.num("knot_range", f.knot_range);
    f.restarts = s.size("restarts", f.restarts);
    f.seed = s.u64("seed", f.seed);
}

inline void read_sweep(const Doc& doc, SweepConfig& w) {
    Section s{doc, "sweep"};
    w.t_max = s.num("t_max", w.t_max);
    w.grid_points = s.size("grid", w.grid_points);
    w.samples_per_t = s.size("samples", w.samples_per_t);
    w.estimator = estimator_from_name(s.str("estimator", estimator_name(w.estimator)));
    w.seed = s.u64("seed", w.seed);
}

inline void read_resample(const Doc& doc, ResampleConfig& r) {
    Section s{doc, "resample"};
    r.target = s.str("target", r.target);
    if (r.target != "uniform" && r.target != "self")
        throw ConfigError("resample.target must be \"uniform\" or \"self\"");
    r.lo = s.num("lo", r.lo);
    r.hi = s.num("hi", r.hi);
    r.count = s.size("count", r.count);
}

inline void read_target(const Doc& doc, TargetSynthConfig& t) {
    Section s{doc, "target"};
    t.image_path = s.str("image", t.image_path);
    t.z_seed = s.u64("z_seed", t.z_seed);
    t.transform = s.str("transform", t.transform);
    (void)transform_from_name(t.transform); // validate the name
    t.amount = s.num("amount", t.amount);
}

inline void read_curvature(const Doc& doc, CurvatureConfig& c) {
    Section s{doc, "curvature"};
    c.transform = s.str("transform", c.transform);
    (void)transform_from_name(c.transform);
    c.t_max = s.num("t_max", c.t_max);
    c.grid_points = s.size("grid", c.grid_points);
    c.z_seed = s.u64("z_seed", c.z_seed);
}

inline void read_compare(const Doc& doc, CompareConfig& c) {
    Section s{doc, "compare"};
    if (auto v = doc.get("compare", "sigmas")) c.sigmas = to_double_list(*v, "compare.sigmas");
    c.iterations = s.size("iterations", c.iterations);
    c.targets = s.size("targets", c.targets);
    c.target_seed = s.u64("target_seed", c.target_seed);
    c.checker_amplitude = s.num("checker_amplitude", c.checker_amplitude);
}

} // namespace cfgdetail

/// Parses and validates a full run description; unknown keys are errors.
inline RunConfig parse_config(const std::string& text) {
    using namespace cfgdetail;
    const Doc doc = Doc::parse(text);
    RunConfig rc;
    rc.command = command_from_name(doc.require("", "command"));
    Section top{doc, ""};
    rc.seed = top.u64("seed", rc.seed);
    rc.input_path = top.str("input", rc.input_path);
    rc.model_path = top.str("model", rc.model_path);
    rc.output_path = top.str("output", rc.output_path);
    rc.aux_output = top.str("aux_output", rc.aux_output);

    read_generator(doc, rc.generator);
    read_dataset(doc, rc.dataset);
    read_vae(doc, rc.vae);
    read_trajectories(doc, rc.trajectories);
    read_loss(doc, rc.loss);
    read_inversion(doc, rc.inversion);
    read_fit(doc, rc.fit);
    read_sweep(doc, rc.sweep);
    read_resample(doc, rc.resample);
    read_target(doc, rc.target);
    read_curvature(doc, rc.curvature);
    read_compare(doc, rc.compare);
    if (auto b = doc.get("", "betas")) rc.betas = to_double_list(*b, "betas");

    doc.check_all_consumed();

    // per-command required paths
    auto need = [&](const std::string& value, const char* key) {
        if (value.empty())
            throw ConfigError(std::string("command ") + command_name(rc.command) +
                              " requires key \"" + key + "\"");
    };
    switch (rc.command) {
        case Command::SynthData: need(rc.output_path, "output"); break;
        case Command::TrainVae:
            need(rc.input_path, "input");
            need(rc.output_path, "output");
            break;
        case Command::GenTrajectories: need(rc.output_path, "output"); break;
        case Command::FitDirection:
            need(rc.input_path, "input");
            need(rc.output_path, "output");
            break;
        case Command::Sweep:
            need(rc.model_path, "model");
            need(rc.output_path, "output");
            break;
        case Command::Resample:
            need(rc.model_path, "model");
            need(rc.output_path, "output");
            break;
        case Command::InvertOne: need(rc.output_path, "output"); break;
        case Command::AnalyzeCurvature: need(rc.output_path, "output"); break;
        case Command::CompareLosses: need(rc.output_path, "output"); break;
        case Command::BetaStudy: need(rc.output_path, "output"); break;
    }
    return rc;
}

inline std::string RunConfig::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "command = " << command_name(command) << "\n";
    os << "seed = " << seed << "\n";
    if (!input_path.empty()) os << "input = " << input_path << "\n";
    if (!model_path.empty()) os << "model = " << model_path << "\n";
    if (!output_path.empty()) os << "output = " << output_path << "\n";
    if (!aux_output.empty()) os << "aux_output = " << aux_output << "\n";
    os << "betas =";
    for (double b : betas) os << " " << b;
    os << "\n";

    os << "\n[generator]\n";
    os << "kind = " << generator.kind << "\n";
    os << "d = " << generator.d << "\n";
    os << "height = " << generator.height << "\n";
    os << "width = " << generator.width << "\n";
    os << "shape = " << (generator.shape == SpriteShape::Disc ? "disc" : "square") << "\n";
    os << "tau = " << generator.tau << "\n";
    os << "r_min = " << generator.r_min << "\n";
    os << "r_max = " << generator.r_max << "\n";
    os << "direction_seed = " << generator.direction_seed << "\n";
    if (!generator.decoder_path.empty()) os << "decoder = " << generator.decoder_path << "\n";

    os << "\n[dataset]\n";
    os << "height = " << dataset.height << "\n";
    os << "width = " << dataset.width << "\n";
    os << "x_lo = " << dataset.x_lo << "\n";
    os << "x_hi = " << dataset.x_hi << "\n";
    os << "y_lo = " << dataset.y_lo << "\n";
    os << "y_hi = " << dataset.y_hi << "\n";
    os << "r_min = " << dataset.r_min << "\n";
    os << "r_max = " << dataset.r_max << "\n";
    os << "hard_edge = " << (dataset.hard_edge ? "true" : "false") << "\n";
    os << "tau = " << dataset.tau << "\n";
    os << "count = " << dataset.count << "\n";
    os << "seed = " << dataset.seed << "\n";

    os << "\n[vae]\n";
    os << "beta = " << vae.beta << "\n";
    os << "latent_dim = " << vae.latent_dim << "\n";
    os << "hidden =";
    for (auto h : vae.hidden) os << " " << h;
    os << "\n";
    os << "learning_rate = " << vae.learning_rate << "\n";
    os << "batch_size = " << vae.batch_size << "\n";
    os << "steps = " << vae.steps << "\n";
    os << "seed = " << vae.seed << "\n";

    os << "\n[trajectories]\n";
    os << "count = " << trajectories.num_trajectories << "\n";
    os << "steps = " << trajectories.steps << "\n";
    os << "max_t = " << trajectories.max_t << "\n";
    os << "filter = " << (trajectories.filter == FilterRule::Threshold ? "threshold" : "keep_fraction")
       << "\n";
    os << "theta = " << trajectories.threshold << "\n";
    os << "keep_fraction = " << trajectories.keep_fraction << "\n";
    os << "iterations = " << trajectories.per_step_iterations << "\n";

    os << "\n[loss]\n";
    os << "kind = " << (loss.kind == LossKind::Mse ? "mse" : "freq_weighted") << "\n";
    os << "sigma = " << loss.sigma << "\n";

    os << "\n[inversion]\n";
    os << "learning_rate = " << inversion.learning_rate << "\n";
    os << "iterations = " << inversion.max_iterations << "\n";
    os << "radius = " << inversion.projection_radius << "\n";
    os << "tolerance = " << inversion.tolerance << "\n";
    os << "seed = " << inversion.seed << "\n";

    os << "\n[fit]\n";
    os << "learning_rate = " << fit.learning_rate << "\n";
    os << "final_lr_fraction = " << fit.final_lr_fraction << "\n";
    os << "epochs = " << fit.epochs << "\n";
    os << "batch_size = " << fit.batch_size << "\n";
    os << "knots = " << fit.knot_count << "\n";
    os << "knot_range = " << fit.knot_range << "\n";
    os << "restarts = " << fit.restarts << "\n";
    os << "seed = " << fit.seed << "\n";

    os << "\n[sweep]\n";
    os << "t_max = " << sweep.t_max << "\n";
    os << "grid = " << sweep.grid_points << "\n";
    os << "samples = " << sweep.samples_per_t << "\n";
    os << "estimator = " << estimator_name(sweep.estimator) << "\n";
    os << "seed = " << sweep.seed << "\n";

    os << "\n[resample]\n";
    os << "target = " << resample.target << "\n";
    os << "lo = " << resample.lo << "\n";
    os << "hi = " << resample.hi << "\n";
    os << "count = " << resample.count << "\n";

    os << "\n[target]\n";
    if (!target.image_path.empty()) os << "image = " << target.image_path << "\n";
    os << "z_seed = " << target.z_seed << "\n";
    os << "transform = " << target.transform << "\n";
    os << "amount = " << target.amount << "\n";

    os << "\n[curvature]\n";
    os << "transform = " << curvature.transform << "\n";
    os << "t_max = " << curvature.t_max << "\n";
    os << "grid = " << curvature.grid_points << "\n";
    os << "z_seed = " << curvature.z_seed << "\n";

    os << "\n[compare]\n";
    os << "sigmas =";
    for (double s : compare.sigmas) os << " " << s;
    os << "\n";
    os << "iterations = " << compare.iterations << "\n";
    os << "targets = " << compare.targets << "\n";
    os << "target_seed = " << compare.target_seed << "\n";
    os << "checker_amplitude = " << compare.checker_amplitude << "\n";
    return os.str();
}

} // namespace latdir
