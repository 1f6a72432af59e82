#pragma once

#include "magcal/types.hpp"

namespace magcal {

/// Closest point to `p` on the origin-centered sphere of radius `field`.
/// The minimizer of |q - p|^2 subject to |q| = field is the radial projection,
/// unique whenever p is not the origin.
inline Vec3 project_to_sphere(const Vec3& p, double field) {
    if (!(field > 0.0)) throw argument_error("projection radius must be positive");
    const double n = p.norm();
    if (n == 0.0) throw numeric_error("projection of the zero vector is not unique");
    return p * (field / n);
}

/// Raw measurements paired with their sphere counterparts.
struct TrainingPairs {
    SampleSeries inputs;
    SampleSeries targets;
    double field = 0.0;  // nT
};

inline TrainingPairs build_training_pairs(const SampleSeries& raw, double field) {
    if (!(field > 0.0)) throw argument_error("training field must be positive");
    TrainingPairs pairs;
    pairs.inputs = raw;
    pairs.field = field;
    pairs.targets.sample_rate = raw.sample_rate;
    pairs.targets.label = raw.label;
    pairs.targets.samples.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].isZero())
            throw numeric_error("zero-vector sample at index " + std::to_string(i));
        pairs.targets.samples.push_back({raw.samples[i].t, project_to_sphere(raw[i], field)});
    }
    return pairs;
}

}  // namespace magcal
