#pragma once

#include "magcal/types.hpp"

#include <cmath>

namespace magcal {

/// Number of samples spanned by a window of `window_seconds` at `sample_rate`.
inline std::size_t window_samples(double window_seconds, double sample_rate) {
    const double w = std::round(window_seconds * sample_rate);
    return w < 1.0 ? 0 : static_cast<std::size_t>(w);
}

/// Trailing moving average over w = round(window_seconds * sample_rate)
/// samples. Each output sample carries the timestamp of the last sample in its
/// window, so the result is w - 1 samples shorter than the input.
inline SampleSeries moving_average(const SampleSeries& series, double window_seconds) {
    if (!(window_seconds > 0.0)) throw argument_error("moving average window must be positive");
    const std::size_t w = window_samples(window_seconds, series.sample_rate);
    if (w < 1) throw argument_error("moving average window shorter than one sample");
    if (w > series.size())
        throw argument_error("moving average window (" + std::to_string(w) +
                             " samples) longer than series (" + std::to_string(series.size()) +
                             ")");

    SampleSeries out;
    out.sample_rate = series.sample_rate;
    out.label = series.label;
    out.samples.reserve(series.size() - w + 1);

    // Running sum refreshed every w steps to stop drift from accumulating.
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i < w; ++i) sum += series[i];
    const double inv = 1.0 / static_cast<double>(w);
    out.samples.push_back({series.samples[w - 1].t, sum * inv});
    for (std::size_t end = w; end < series.size(); ++end) {
        if ((end - w + 1) % w == 0) {
            sum.setZero();
            for (std::size_t i = end + 1 - w; i <= end; ++i) sum += series[i];
        } else {
            sum += series[end] - series[end - w];
        }
        out.samples.push_back({series.samples[end].t, sum * inv});
    }
    return out;
}

}  // namespace magcal
