#pragma once

// CSV and JSON file formats.
//
// Series CSV: optional `# key: value` comment lines (sample_rate, label), a
// `t,bx,by,bz` header, then one sample per line in seconds / nT. Numbers are
// written in shortest round-trip form, so write -> read is exact.

#include "magcal/coverage.hpp"
#include "magcal/geocal.hpp"
#include "magcal/metrics.hpp"
#include "magcal/nncal.hpp"
#include "magcal/pipeline.hpp"
#include "magcal/synth.hpp"
#include "magcal/types.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace magcal::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view field, std::size_t line) {
    field = trim(field);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw parse_error("line " + std::to_string(line) + ": invalid number '" +
                          std::string(field) + "'");
    if (!std::isfinite(v))
        throw parse_error("line " + std::to_string(line) + ": non-finite value");
    return v;
}

}  // namespace detail

inline void write_series_csv(std::ostream& os, const SampleSeries& series) {
    if (!series.label.empty()) os << "# label: " << series.label << '\n';
    os << "# sample_rate: " << format_double(series.sample_rate) << '\n';
    os << "t,bx,by,bz\n";
    std::string line;
    for (const auto& s : series.samples) {
        line.clear();
        line += format_double(s.t);
        for (int k = 0; k < 3; ++k) {
            line += ',';
            line += format_double(s.b(k));
        }
        line += '\n';
        os << line;
    }
}

/// Parses a series CSV. When the file carries no sample_rate comment the rate
/// is inferred from the mean timestamp spacing.
inline SampleSeries read_series_csv(std::istream& is) {
    SampleSeries series;
    std::optional<double> rate;
    bool header_seen = false;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto body = detail::trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string_view::npos) continue;
            const auto key = detail::trim(body.substr(0, colon));
            const auto value = detail::trim(body.substr(colon + 1));
            if (key == "sample_rate") rate = detail::parse_double(value, line_no);
            else if (key == "label") series.label = std::string(value);
            continue;
        }
        if (!header_seen) {
            std::string compact;
            for (char c : line)
                if (c != ' ' && c != '\t') compact += c;
            if (compact != "t,bx,by,bz")
                throw parse_error("line " + std::to_string(line_no) +
                                  ": expected header 't,bx,by,bz'");
            header_seen = true;
            continue;
        }
        std::array<double, 4> v{};
        std::size_t field = 0;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            if (field >= 4)
                throw parse_error("line " + std::to_string(line_no) + ": expected 4 fields");
            v[field++] = detail::parse_double(line.substr(start, comma - start), line_no);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (field != 4) throw parse_error("line " + std::to_string(line_no) + ": expected 4 fields");
        if (!series.samples.empty() && !(v[0] > series.samples.back().t))
            throw parse_error("line " + std::to_string(line_no) +
                              ": timestamps must be strictly increasing");
        series.samples.push_back({v[0], Vec3(v[1], v[2], v[3])});
    }
    if (!header_seen) throw parse_error("missing 't,bx,by,bz' header");
    if (rate) {
        if (!(*rate > 0.0)) throw parse_error("sample_rate must be positive");
        series.sample_rate = *rate;
    } else if (series.size() >= 2) {
        const double span = series.samples.back().t - series.samples.front().t;
        series.sample_rate = static_cast<double>(series.size() - 1) / span;
    }
    return series;
}

inline void write_series_csv(const std::string& path, const SampleSeries& series) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    write_series_csv(os, series);
    if (!os) throw io_error("write failed for '" + path + "'");
}

inline SampleSeries read_series_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open '" + path + "' for reading");
    try {
        return read_series_csv(is);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

// --- JSON ---------------------------------------------------------------

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json mat_json(const Mat3& m) {
    json a = json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a.push_back(m(i, j));
    return a;
}

inline Vec3 vec_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw parse_error(std::string(what) + ": expected 3 numbers");
    Vec3 v;
    for (int k = 0; k < 3; ++k) {
        if (!j[static_cast<std::size_t>(k)].is_number())
            throw parse_error(std::string(what) + ": expected numbers");
        v(k) = j[static_cast<std::size_t>(k)].get<double>();
    }
    return v;
}

inline Mat3 mat_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 9)
        throw parse_error(std::string(what) + ": expected 9 numbers (row-major)");
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j2 = 0; j2 < 3; ++j2) {
            const auto& e = j[static_cast<std::size_t>(3 * i + j2)];
            if (!e.is_number()) throw parse_error(std::string(what) + ": expected numbers");
            m(i, j2) = e.get<double>();
        }
    return m;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json to_json(const CalibrationModel& m, const std::string& created_at = utc_timestamp()) {
    json j;
    j["matrix"] = mat_json(m.matrix);
    j["offset"] = vec_json(m.offset);
    j["target_field"] = m.target_field;
    j["provenance"] = std::string(to_string(m.provenance));
    j["created_at"] = created_at;
    return j;
}

inline CalibrationModel model_from_json(const json& j) {
    try {
        CalibrationModel m;
        m.matrix = mat_from(j.at("matrix"), "matrix");
        m.offset = vec_from(j.at("offset"), "offset");
        m.target_field = j.at("target_field").get<double>();
        m.provenance = provenance_from_string(j.at("provenance").get<std::string>());
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw parse_error(std::string("calibration model: ") + e.what());
    } catch (const Error& e) {
        throw parse_error(std::string("calibration model: ") + e.what());
    }
}

inline json to_json(const LinearNet& net, double field) {
    json j;
    j["layer1"] = {{"weights", mat_json(net.w1)}, {"bias", vec_json(net.b1)}};
    j["layer2"] = {{"weights", mat_json(net.w2)}, {"bias", vec_json(net.b2)}};
    j["seed"] = net.seed;
    j["field"] = field;
    return j;
}

inline std::pair<LinearNet, double> net_from_json(const json& j) {
    try {
        LinearNet net;
        net.w1 = mat_from(j.at("layer1").at("weights"), "layer1.weights");
        net.b1 = vec_from(j.at("layer1").at("bias"), "layer1.bias");
        net.w2 = mat_from(j.at("layer2").at("weights"), "layer2.weights");
        net.b2 = vec_from(j.at("layer2").at("bias"), "layer2.bias");
        net.seed = j.at("seed").get<std::uint64_t>();
        const double field = j.at("field").get<double>();
        if (!net.all_finite() || !(field > 0.0)) throw parse_error("invalid network parameters");
        return {net, field};
    } catch (const json::exception& e) {
        throw parse_error(std::string("linear net: ") + e.what());
    }
}

inline json to_json(const MetricReport& r) {
    return {{"ptp", r.ptp},
            {"variance", r.variance},
            {"mean_magnitude", r.mean_magnitude},
            {"median_magnitude", r.median_magnitude},
            {"n_samples", r.n_samples}};
}

inline json to_json(const TrainReport& r) {
    return {{"initial_loss", r.initial_loss}, {"final_loss", r.final_loss},
            {"epochs_run", r.epochs_run},     {"best_epoch", r.best_epoch},
            {"seed", r.seed},                 {"loss_curve", r.loss_curve}};
}

/// Coverage summary; at most `max_bald_cells` bald cell centers are listed.
inline json to_json(const CoverageReport& r, std::size_t max_bald_cells = 1000) {
    json cells = json::array();
    for (std::size_t i = 0; i < r.bald_cells.size() && i < max_bald_cells; ++i)
        cells.push_back({r.bald_cells[i].first, r.bald_cells[i].second});
    return {{"percent", r.percent},
            {"n_samples", r.n_samples},
            {"grid", {{"n_theta", r.grid.n_theta}, {"n_phi", r.grid.n_phi},
                      {"threshold", r.grid.threshold},
                      {"meets_threshold", r.grid.meets_threshold()}}},
            {"bald_cell_count", r.bald_cells.size()},
            {"bald_cells_truncated", r.bald_cells.size() > max_bald_cells},
            {"bald_cells", cells}};
}

inline std::string_view to_string(SamplingMode m) {
    switch (m) {
        case SamplingMode::uniform_full: return "uniform_full";
        case SamplingMode::uniform_cap: return "uniform_cap";
        case SamplingMode::trajectory: return "trajectory";
    }
    return "uniform_full";
}

inline SamplingMode sampling_mode_from_string(std::string_view s) {
    if (s == "uniform_full" || s == "full") return SamplingMode::uniform_full;
    if (s == "uniform_cap" || s == "cap") return SamplingMode::uniform_cap;
    if (s == "trajectory") return SamplingMode::trajectory;
    throw argument_error("unknown sampling mode '" + std::string(s) + "'");
}

/// Sidecar recording how a simulated dataset was produced.
inline json to_json(const DistortionTruth& truth, const SamplingPlan& plan) {
    json t;
    t["soft_iron"] = mat_json(truth.soft_iron);
    t["hard_iron"] = vec_json(truth.hard_iron);
    t["noise_sigma"] = truth.noise_sigma;
    t["field"] = truth.field;
    if (truth.angles) t["angles_rad"] = vec_json(*truth.angles);
    if (truth.scales) t["scales"] = vec_json(*truth.scales);
    json p;
    p["mode"] = std::string(to_string(plan.mode));
    p["fraction"] = plan.fraction;
    p["rev_rate"] = plan.rev_rate;
    p["duration"] = plan.duration;
    p["n_samples"] = plan.resolved_samples();
    p["sample_rate"] = plan.sample_rate;
    p["seed"] = plan.seed;
    return {{"truth", t}, {"plan", p}};
}

inline std::pair<DistortionTruth, SamplingPlan> truth_from_json(const json& j) {
    try {
        const auto& t = j.at("truth");
        DistortionTruth truth;
        truth.soft_iron = mat_from(t.at("soft_iron"), "soft_iron");
        truth.hard_iron = vec_from(t.at("hard_iron"), "hard_iron");
        truth.noise_sigma = t.at("noise_sigma").get<double>();
        truth.field = t.at("field").get<double>();
        if (t.contains("angles_rad")) truth.angles = vec_from(t["angles_rad"], "angles_rad");
        if (t.contains("scales")) truth.scales = vec_from(t["scales"], "scales");
        const auto& p = j.at("plan");
        SamplingPlan plan;
        plan.mode = sampling_mode_from_string(p.at("mode").get<std::string>());
        plan.fraction = p.at("fraction").get<double>();
        plan.rev_rate = p.at("rev_rate").get<double>();
        plan.duration = p.at("duration").get<double>();
        plan.n_samples = p.at("n_samples").get<std::size_t>();
        plan.sample_rate = p.at("sample_rate").get<double>();
        plan.seed = p.at("seed").get<std::uint64_t>();
        return {truth, plan};
    } catch (const json::exception& e) {
        throw parse_error(std::string("truth sidecar: ") + e.what());
    }
}

/// Plot-ready sweep table, one row per (coverage, sigma, method).
inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "coverage,sigma,method,ptp,variance,ptp_noisy,variance_noisy,seeds,failures\n";
    for (const auto& r : rows)
        os << format_double(r.coverage) << ',' << format_double(r.sigma) << ',' << to_string(r.method)
           << ',' << format_double(r.ptp) << ',' << format_double(r.variance) << ','
           << format_double(r.ptp_noisy) << ',' << format_double(r.variance_noisy) << ',' << r.seeds
           << ',' << r.failures << '\n';
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    write_sweep_csv(os, rows);
    if (!os) throw io_error("write failed for '" + path + "'");
}

inline json to_json(const TimeExtrapolation& t) {
    return {{"rotation_minutes", t.rotation_minutes},
            {"achieved_coverage", t.achieved},
            {"needed_coverage", t.needed},
            {"minutes", t.minutes()}};
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    os << j.dump(2) << '\n';
    if (!os) throw io_error("write failed for '" + path + "'");
}

inline json read_json(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open '" + path + "' for reading");
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
}

}  // namespace magcal::io
