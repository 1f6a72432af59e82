// magcal: simulate, calibrate, apply, evaluate, coverage and sweep.
//
// Exit status: 0 ok, 1 unexpected, 2 bad arguments, 3 parse failure,
// 4 numeric failure, 5 file I/O.

#include "magcal/io.hpp"
#include "magcal/magcal.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace magcal;
using magcal::io::json;

namespace {

constexpr int kExitUnexpected = 1;
constexpr int kExitArgument = 2;
constexpr int kExitParse = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitIo = 5;

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::argument: return kExitArgument;
        case ErrorKind::parse: return kExitParse;
        case ErrorKind::numeric: return kExitNumeric;
        case ErrorKind::io: return kExitIo;
    }
    return kExitUnexpected;
}

struct Options {
    std::string input, output, model, report, net;
    std::string method = "geo";
    std::string preset = "custom";
    std::optional<double> window_seconds;
    double field = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> coverages{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> sigmas{0.1, 0.3};
    std::size_t epochs = 0;  // 0: command default
    double learning_rate = 0.0;

    // simulate
    std::size_t samples = 100000;
    double sigma = 0.1;
    double coverage = 1.0;
    std::string mode = "full";
    double rev_rate = 1.0;
    double duration = 0.0;

    // coverage grid
    std::size_t n_theta = 500, n_phi = 400;

    // sweep
    std::string methods = "both";
    std::size_t seeds = 5;
    std::size_t test_samples = 100000;
    double rotation_minutes = 2.0;
    double achieved = 0.26;
    double needed = 0.6;
};

std::string with_suffix(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

double window_for(const Options& o) {
    if (o.window_seconds) return *o.window_seconds;
    return preset_config(preset_from_string(o.preset)).window_seconds;
}

void emit(const Options& o, const json& j) {
    if (o.output.empty()) std::cout << j.dump(2) << '\n';
    else io::write_json(o.output, j);
}

TrainConfig train_config(const Options& o) {
    TrainConfig cfg;
    cfg.seed = o.seed;
    if (o.epochs) cfg.epochs = o.epochs;
    if (o.learning_rate > 0.0) cfg.learning_rate = o.learning_rate;
    return cfg;
}

int cmd_simulate(const Options& o) {
    if (o.output.empty()) throw argument_error("--output directory is required");
    const auto pc = preset_config(preset_from_string(o.preset));
    SamplingPlan plan;
    plan.mode = io::sampling_mode_from_string(o.mode);
    plan.fraction = o.coverage;
    plan.rev_rate = o.rev_rate;
    plan.duration = o.duration;
    plan.n_samples = o.samples;
    plan.sample_rate = pc.sample_rate;
    plan.seed = o.seed;
    // A partial coverage with the default mode means a cap.
    if (plan.mode == SamplingMode::uniform_full && o.coverage < 1.0) plan.mode = SamplingMode::uniform_cap;
    if (plan.mode == SamplingMode::trajectory && o.coverage < 1.0)
        throw argument_error("--coverage does not apply to trajectories");
    const auto truth = DistortionTruth::typical(o.sigma, o.field > 0.0 ? o.field : kDefaultField);
    const auto [raw, ideal] = generate(truth, plan);

    std::error_code ec;
    fs::create_directories(o.output, ec);
    if (ec) throw io_error("cannot create '" + o.output + "': " + ec.message());
    const fs::path dir(o.output);
    io::write_series_csv((dir / "raw.csv").string(), raw);
    io::write_series_csv((dir / "ideal.csv").string(), ideal);
    io::write_json((dir / "truth.json").string(), io::to_json(truth, plan));
    std::cerr << "wrote " << raw.size() << " samples to " << o.output << '\n';
    return 0;
}

int cmd_calibrate(const Options& o, Method method) {
    if (o.input.empty() || o.output.empty()) throw argument_error("--input and --output are required");
    const auto raw = io::read_series_csv(o.input);
    const double window = window_for(o);
    const auto series = preprocess(raw, window);
    const auto run = calibrate(series, method, train_config(o), o.field);
    run.model.validate();

    io::write_json(o.output, io::to_json(run.model));
    json rep;
    rep["method"] = std::string(to_string(method));
    rep["preset"] = o.preset;
    rep["window_seconds"] = window;
    rep["field"] = run.field;
    rep["n_samples"] = series.size();
    rep["ptp_before"] = run.before.ptp;
    rep["ptp_after"] = run.after.ptp;
    rep["var_before"] = run.before.variance;
    rep["var_after"] = run.after.variance;
    rep["before"] = io::to_json(run.before);
    rep["after"] = io::to_json(run.after);
    if (run.train) rep["training"] = io::to_json(*run.train);
    io::write_json(o.report.empty() ? with_suffix(o.output, ".report.json") : o.report, rep);
    if (run.net)
        io::write_json(o.net.empty() ? with_suffix(o.output, ".net.json") : o.net,
                       io::to_json(*run.net, run.field));
    std::cerr << "ptp " << run.before.ptp << " -> " << run.after.ptp << " nT\n";
    return 0;
}

int cmd_apply(const Options& o) {
    if (o.input.empty() || o.output.empty() || o.model.empty())
        throw argument_error("--input, --model and --output are required");
    const auto model = io::model_from_json(io::read_json(o.model));
    model.validate();
    const auto series = preprocess(io::read_series_csv(o.input), window_for(o));
    io::write_series_csv(o.output, apply(model, series));
    return 0;
}

int cmd_evaluate(const Options& o) {
    if (o.input.empty()) throw argument_error("--input is required");
    auto series = preprocess(io::read_series_csv(o.input), window_for(o));
    if (!o.model.empty()) {
        const auto model = io::model_from_json(io::read_json(o.model));
        model.validate();
        series = apply(model, series);
    }
    emit(o, io::to_json(evaluate(series)));
    return 0;
}

int cmd_coverage(const Options& o) {
    if (o.input.empty()) throw argument_error("--input is required");
    auto series = io::read_series_csv(o.input);
    if (!o.model.empty()) series = apply(io::model_from_json(io::read_json(o.model)), series);
    GridSpec grid;
    grid.n_theta = o.n_theta;
    grid.n_phi = o.n_phi;
    emit(o, io::to_json(coverage(series, grid)));
    return 0;
}

int cmd_sweep(const Options& o) {
    SweepConfig cfg;
    cfg.coverages = o.coverages;
    cfg.sigmas = o.sigmas;
    if (o.methods == "both") cfg.methods = {Method::geo, Method::nn};
    else cfg.methods = {method_from_string(o.methods)};
    cfg.seeds = o.seeds;
    cfg.base_seed = o.seed;
    cfg.n_samples = o.samples;
    cfg.n_test = o.test_samples;
    if (o.field > 0.0) cfg.field = o.field;
    cfg.nn.seed = o.seed;
    if (o.epochs) cfg.nn.epochs = o.epochs;
    if (o.learning_rate > 0.0) cfg.nn.learning_rate = o.learning_rate;

    const TimeExtrapolation time{o.rotation_minutes, o.achieved, o.needed};
    const double minutes = time.minutes();  // validate before the long run

    const auto rows = run_sweep(cfg, [](const SweepRow& r) {
        std::cerr << "coverage " << r.coverage << " sigma " << r.sigma << ' ' << to_string(r.method)
                  << ": ptp " << r.ptp << " nT\n";
    });
    if (o.output.empty()) io::write_sweep_csv(std::cout, rows);
    else io::write_sweep_csv(o.output, rows);

    const auto tj = io::to_json(time);
    if (o.report.empty()) std::cerr << tj.dump(2) << '\n';
    else io::write_json(o.report, tj);
    std::cerr << "rotation time for " << o.needed * 100 << "% coverage: " << minutes << " min\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scalar calibration of three-axis magnetometers"};
    app.require_subcommand(1);
    Options o;

    auto common_io = [&](CLI::App* c) {
        c->add_option("--input", o.input, "input series CSV");
        c->add_option("--output", o.output, "output path");
    };
    auto preprocessing = [&](CLI::App* c) {
        c->add_option("--preset", o.preset,
                      "mag649-3khz | mag649-250hz | mag648-1khz | mag648-250hz | custom");
        c->add_option("--window-seconds", o.window_seconds, "moving-average window, overrides preset");
    };
    auto training = [&](CLI::App* c) {
        c->add_option("--epochs", o.epochs);
        c->add_option("--learning-rate", o.learning_rate);
    };

    auto* sim = app.add_subcommand("simulate", "write raw.csv, ideal.csv and truth.json");
    sim->add_option("--output", o.output, "output directory");
    sim->add_option("--preset", o.preset, "sets the sample rate");
    sim->add_option("--samples", o.samples);
    sim->add_option("--sigma", o.sigma, "noise per axis, nT");
    sim->add_option("--mode", o.mode, "full | cap | trajectory");
    sim->add_option("--coverage", o.coverage, "cap area fraction");
    sim->add_option("--rev-rate", o.rev_rate, "trajectory revolutions per second");
    sim->add_option("--duration", o.duration, "trajectory seconds, overrides --samples");
    sim->add_option("--field", o.field, "nT");
    sim->add_option("--seed", o.seed);

    auto* cal = app.add_subcommand("calibrate", "calibrate with --method");
    auto* geo = app.add_subcommand("calibrate-geo", "ellipsoid-fit calibration");
    auto* nn = app.add_subcommand("calibrate-nn", "linear-network calibration");
    for (auto* c : {cal, geo, nn}) {
        common_io(c);
        preprocessing(c);
        c->add_option("--field", o.field, "target field, nT (default: median magnitude)");
        c->add_option("--report", o.report, "metric report JSON");
    }
    cal->add_option("--method", o.method, "geo | nn");
    for (auto* c : {cal, nn}) {
        training(c);
        c->add_option("--seed", o.seed);
        c->add_option("--net", o.net, "network weights JSON");
    }

    auto* app_cmd = app.add_subcommand("apply", "apply a calibration model");
    common_io(app_cmd);
    preprocessing(app_cmd);
    app_cmd->add_option("--model", o.model);

    auto* eval = app.add_subcommand("evaluate", "magnitude metrics, optionally after a model");
    common_io(eval);
    preprocessing(eval);
    eval->add_option("--model", o.model);

    auto* cov = app.add_subcommand("coverage", "direction-sphere coverage");
    common_io(cov);
    cov->add_option("--model", o.model, "apply before binning");
    cov->add_option("--n-theta", o.n_theta);
    cov->add_option("--n-phi", o.n_phi);

    auto* sweep = app.add_subcommand("sweep", "calibration error against coverage and noise");
    sweep->add_option("--output", o.output, "sweep CSV (default stdout)");
    sweep->add_option("--report", o.report, "time extrapolation JSON (default stderr)");
    sweep->add_option("--coverages", o.coverages)->delimiter(',');
    sweep->add_option("--sigmas", o.sigmas)->delimiter(',');
    sweep->add_option("--method", o.methods, "geo | nn | both");
    sweep->add_option("--seeds", o.seeds);
    sweep->add_option("--samples", o.samples);
    sweep->add_option("--test-samples", o.test_samples);
    sweep->add_option("--field", o.field);
    sweep->add_option("--seed", o.seed);
    sweep->add_option("--rotation-minutes", o.rotation_minutes);
    sweep->add_option("--achieved-coverage", o.achieved);
    sweep->add_option("--needed-coverage", o.needed);
    training(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitArgument;
    }

    try {
        if (*sim) return cmd_simulate(o);
        if (*cal) return cmd_calibrate(o, method_from_string(o.method));
        if (*geo) return cmd_calibrate(o, Method::geo);
        if (*nn) return cmd_calibrate(o, Method::nn);
        if (*app_cmd) return cmd_apply(o);
        if (*eval) return cmd_evaluate(o);
        if (*cov) return cmd_coverage(o);
        if (*sweep) return cmd_sweep(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const io::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUnexpected;
    }
    return kExitUnexpected;
}
