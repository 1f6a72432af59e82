#pragma once

#include "magcal/filter.hpp"
#include "magcal/geocal.hpp"
#include "magcal/metrics.hpp"
#include "magcal/nncal.hpp"
#include "magcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace magcal {

// Acquisition configurations: sensor model and sampling rate. Bandwidth is a
// property of the hardware and is not simulated; a preset only fixes the
// sample rate and the averaging window.
enum class Preset { mag649_3khz, mag649_250hz, mag648_1khz, mag648_250hz, custom };

struct PresetConfig {
    double sample_rate = 3000.0;  // Hz
    double window_seconds = 0.0;  // 0: no averaging
};

inline PresetConfig preset_config(Preset p) {
    switch (p) {
        case Preset::mag649_3khz: return {3000.0, 0.1};
        case Preset::mag649_250hz: return {250.0, 0.1};
        case Preset::mag648_1khz: return {1000.0, 0.1};
        case Preset::mag648_250hz: return {250.0, 0.1};
        case Preset::custom: return {3000.0, 0.0};
    }
    return {};
}

inline std::string_view to_string(Preset p) {
    switch (p) {
        case Preset::mag649_3khz: return "mag649-3khz";
        case Preset::mag649_250hz: return "mag649-250hz";
        case Preset::mag648_1khz: return "mag648-1khz";
        case Preset::mag648_250hz: return "mag648-250hz";
        case Preset::custom: return "custom";
    }
    return "custom";
}

inline Preset preset_from_string(std::string_view s) {
    for (auto p : {Preset::mag649_3khz, Preset::mag649_250hz, Preset::mag648_1khz,
                   Preset::mag648_250hz, Preset::custom})
        if (to_string(p) == s) return p;
    throw argument_error("unknown preset '" + std::string(s) + "'");
}

/// Moving average over `window_seconds`; a non-positive window passes the series through.
inline SampleSeries preprocess(const SampleSeries& series, double window_seconds) {
    if (window_seconds > 0.0) return moving_average(series, window_seconds);
    return series;
}

enum class Method { geo, nn };

inline std::string_view to_string(Method m) { return m == Method::geo ? "geo" : "nn"; }

inline Method method_from_string(std::string_view s) {
    if (s == "geo") return Method::geo;
    if (s == "nn") return Method::nn;
    throw argument_error("unknown method '" + std::string(s) + "' (expected geo or nn)");
}

struct CalibrationRun {
    CalibrationModel model;
    MetricReport before;
    MetricReport after;
    double field = 0.0;
    std::optional<LinearNet> net;
    std::optional<TrainReport> train;
};

/// Calibrate an already preprocessed series with either pipeline.
inline CalibrationRun calibrate(const SampleSeries& series, Method method, const TrainConfig& nn = {},
                                double target_field = 0.0) {
    if (series.empty()) throw argument_error("cannot calibrate an empty series");
    CalibrationRun run;
    run.before = evaluate(series);
    run.field = target_field > 0.0 ? target_field : estimate_field_magnitude(series);
    if (method == Method::geo) {
        auto [model, after] = calibrate_geometric(series, run.field);
        run.model = model;
        run.after = after;
    } else {
        auto cal = calibrate_neural(series, nn, run.field);
        run.model = cal.model;
        run.after = cal.report;
        run.net = cal.net;
        run.train = std::move(cal.train);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Coverage sweep

struct SweepConfig {
    std::vector<double> coverages{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> sigmas{0.1, 0.3};
    std::vector<Method> methods{Method::geo, Method::nn};
    std::size_t seeds = 5;
    std::uint64_t base_seed = 0;
    std::size_t n_samples = 100000;
    std::size_t n_test = 100000;
    double field = kDefaultField;
    TrainConfig nn = [] {
        TrainConfig c;
        c.epochs = 300;
        return c;
    }();

    void validate() const {
        if (coverages.empty() || sigmas.empty() || methods.empty())
            throw argument_error("sweep needs coverages, sigmas and methods");
        for (double c : coverages)
            if (!(c > 0.0 && c <= 1.0)) throw argument_error("coverage fractions must lie in (0, 1]");
        for (double s : sigmas)
            if (!(s >= 0.0) || !std::isfinite(s)) throw argument_error("sigmas must be non-negative");
        if (seeds == 0) throw argument_error("sweep needs at least one seed");
        if (n_samples < 10 || n_test < 1) throw argument_error("sweep sample counts too small");
        nn.validate();
    }
};

struct SweepRow {
    double coverage = 0.0;
    double sigma = 0.0;
    Method method = Method::geo;
    // Medians over seeds of the corrected test set's magnitude PTP (nT) and
    // variance (nT^2). The test set is noiseless, so these measure the model
    // alone; the _noisy pair repeats the scoring with the cell's sensor noise.
    double ptp = 0.0;
    double variance = 0.0;
    double ptp_noisy = 0.0;
    double variance_noisy = 0.0;
    std::size_t seeds = 0;
    std::size_t failures = 0;  // seeds whose calibration threw a numeric error
};

/// Each cell: simulate a cap of the given area with noise sigma, calibrate,
/// then score on an independent full-sphere set with the same distortion.
/// Test sets depend only on the seed, so every cell of a seed is scored on
/// the same points.
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg,
                                       const std::function<void(const SweepRow&)>& progress = {}) {
    cfg.validate();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<SweepRow> rows;
    for (double sigma : cfg.sigmas) {
        const auto truth = DistortionTruth::typical(sigma, cfg.field);
        auto clean = truth;
        clean.noise_sigma = 0.0;
        for (double cov : cfg.coverages) {
            for (Method method : cfg.methods) {
                SweepRow row;
                row.coverage = cov;
                row.sigma = sigma;
                row.method = method;
                row.seeds = cfg.seeds;
                std::vector<double> ptps, vars, ptps_noisy, vars_noisy;
                for (std::size_t k = 0; k < cfg.seeds; ++k) {
                    const std::uint64_t seed = cfg.base_seed + k;
                    const auto [raw, ideal] = generate(truth, SamplingPlan::cap(cov, cfg.n_samples, seed));
                    const auto test_plan = SamplingPlan::full(cfg.n_test, seed + 1000003);
                    const auto test = generate(truth, test_plan).first;
                    const auto test_clean = generate(clean, test_plan).first;
                    try {
                        TrainConfig nn = cfg.nn;
                        nn.seed = seed;
                        const auto run = calibrate(raw, method, nn, cfg.field);
                        const auto rep = evaluate(apply(run.model, test_clean));
                        const auto rep_noisy = evaluate(apply(run.model, test));
                        ptps.push_back(rep.ptp);
                        vars.push_back(rep.variance);
                        ptps_noisy.push_back(rep_noisy.ptp);
                        vars_noisy.push_back(rep_noisy.variance);
                    } catch (const Error& e) {
                        if (e.kind() != ErrorKind::numeric) throw;
                        ++row.failures;
                        for (auto* v : {&ptps, &vars, &ptps_noisy, &vars_noisy}) v->push_back(inf);
                    }
                }
                row.ptp = median(ptps);
                row.variance = median(vars);
                row.ptp_noisy = median(ptps_noisy);
                row.variance_noisy = median(vars_noisy);
                if (progress) progress(row);
                rows.push_back(row);
            }
        }
    }
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tuple(a.coverage, a.sigma, static_cast<int>(a.method)) <
               std::tuple(b.coverage, b.sigma, static_cast<int>(b.method));
    });
    return rows;
}

/// Rotation time needed for `needed` coverage when `rotation_minutes` of
/// rotation achieved `achieved`, assuming coverage accumulates uniformly.
struct TimeExtrapolation {
    double rotation_minutes = 2.0;
    double achieved = 0.26;
    double needed = 0.6;

    double minutes() const {
        if (!(achieved > 0.0) || !(needed > 0.0) || !(rotation_minutes > 0.0))
            throw argument_error("time extrapolation inputs must be positive");
        return rotation_minutes * needed / achieved;
    }
};

}  // namespace magcal
