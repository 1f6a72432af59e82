#pragma once

#include "magcal/ellipsoid.hpp"
#include "magcal/metrics.hpp"
#include "magcal/types.hpp"

#include <string>
#include <string_view>
#include <utility>

namespace magcal {

enum class Provenance { geometric, neural, external };

inline std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::geometric: return "geometric";
        case Provenance::neural: return "neural";
        case Provenance::external: return "external";
    }
    return "external";
}

inline Provenance provenance_from_string(std::string_view s) {
    if (s == "geometric") return Provenance::geometric;
    if (s == "neural") return Provenance::neural;
    if (s == "external") return Provenance::external;
    throw parse_error("unknown provenance '" + std::string(s) + "'");
}

/// Affine correction h_c = M (h_r - b) mapping raw readings onto the sphere of
/// radius `target_field`.
struct CalibrationModel {
    Mat3 matrix = Mat3::Identity();
    Vec3 offset = Vec3::Zero();  // nT
    double target_field = 1.0;   // nT
    Provenance provenance = Provenance::external;

    void validate() const {
        if (!matrix.allFinite() || !is_finite(offset))
            throw numeric_error("calibration model has non-finite entries");
        if (!(std::abs(matrix.determinant()) > 1e-12))
            throw numeric_error("calibration matrix is singular");
        if (!(target_field > 0.0) || !std::isfinite(target_field))
            throw numeric_error("calibration target field must be positive");
    }

    Vec3 operator()(const Vec3& raw) const { return matrix * (raw - offset); }
};

/// Median raw magnitude, the reference field strength.
inline double estimate_field_magnitude(const SampleSeries& series) {
    if (series.empty()) throw argument_error("cannot estimate field of an empty series");
    return median(magnitudes(series));
}

/// Correction taking the ellipsoid `e` onto the origin-centered sphere of radius
/// `target_field`: M = R diag(B/a, B/b, B/c) R^T, offset = center.
inline CalibrationModel build_correction(const EllipsoidParams& e, double target_field) {
    if (!(target_field > 0.0)) throw argument_error("target field must be positive");
    if (!(e.semi_axes.minCoeff() > 0.0)) throw numeric_error("degenerate ellipsoid semi-axes");
    CalibrationModel m;
    const Vec3 gain = target_field * e.semi_axes.cwiseInverse();
    m.matrix = e.rotation * gain.asDiagonal() * e.rotation.transpose();
    m.offset = e.center;
    m.target_field = target_field;
    m.provenance = Provenance::geometric;
    return m;
}

inline SampleSeries apply(const CalibrationModel& model, const SampleSeries& series) {
    SampleSeries out;
    out.sample_rate = series.sample_rate;
    out.label = series.label;
    out.samples.reserve(series.size());
    for (const auto& s : series.samples) out.samples.push_back({s.t, model(s.b)});
    return out;
}

/// Ellipsoid fit, median field estimate, correction, and the metrics of the
/// corrected series. A positive `target_field` overrides the median estimate.
inline std::pair<CalibrationModel, MetricReport> calibrate_geometric(const SampleSeries& raw,
                                                                     double target_field = 0.0) {
    const auto quadric = fit_quadric(raw);
    const auto ellipsoid = extract_ellipsoid(quadric);
    const double field = target_field > 0.0 ? target_field : estimate_field_magnitude(raw);
    auto model = build_correction(ellipsoid, field);
    auto report = evaluate(apply(model, raw));
    return {std::move(model), report};
}

}  // namespace magcal
