#pragma once

#include "magcal/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace magcal {

inline double magnitude(const Vec3& v) { return v.norm(); }

inline std::vector<double> magnitudes(const SampleSeries& series) {
    std::vector<double> out;
    out.reserve(series.size());
    for (const auto& s : series.samples) out.push_back(magnitude(s.b));
    return out;
}

inline double median(std::vector<double> values) {
    if (values.empty()) throw argument_error("median of empty sequence");
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

/// Peak-to-peak spread of the magnitude sequence.
inline double ptp(const SampleSeries& series) {
    if (series.empty()) throw argument_error("ptp of empty series");
    double lo = magnitude(series[0]);
    double hi = lo;
    for (const auto& s : series.samples) {
        const double m = magnitude(s.b);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    return hi - lo;
}

namespace detail {

// Two-pass population variance; the mean is removed first so 5e4 nT
// magnitudes with sub-nT spread keep their precision.
inline double population_variance(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size());
}

}  // namespace detail

/// Population variance (divide by N) of the per-sample magnitudes, in nT^2.
inline double magnitude_variance(const SampleSeries& series) {
    if (series.size() < 2) throw argument_error("magnitude variance needs at least 2 samples");
    const auto m = magnitudes(series);
    return detail::population_variance(m);
}

inline double rmse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw argument_error("rmse: length mismatch");
    if (a.empty()) throw argument_error("rmse: empty sequences");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

/// Pearson-normalized cross-correlation for lags in [-L, L], L = min(max_lag, N-1).
/// Element k of the result holds lag k - L: c(lag) = sum_i a'[i] b'[i+lag] / (N sa sb)
/// with a', b' mean-removed, so a copy of `a` delayed by d samples peaks at lag d.
/// A sequence against itself gives 1 at lag 0.
/// A single constant input has zero correlation with everything.
inline std::vector<double> normalized_cross_correlation(
    std::span<const double> a, std::span<const double> b,
    std::size_t max_lag = static_cast<std::size_t>(-1)) {
    if (a.size() != b.size()) throw argument_error("cross-correlation: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw argument_error("cross-correlation needs at least 2 samples");

    auto centered = [n](std::span<const double> v, double& sd) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(n);
        std::vector<double> out(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = v[i] - mean;
            acc += out[i] * out[i];
        }
        sd = std::sqrt(acc / static_cast<double>(n));
        return out;
    };
    double sa = 0.0, sb = 0.0;
    const auto ca = centered(a, sa);
    const auto cb = centered(b, sb);
    if (sa == 0.0 && sb == 0.0)
        throw argument_error("cross-correlation: both sequences are constant");

    const std::size_t reach = std::min(max_lag, n - 1);
    const std::size_t lags = 2 * reach + 1;
    std::vector<double> out(lags, 0.0);
    if (sa == 0.0 || sb == 0.0) return out;
    const double norm = static_cast<double>(n) * sa * sb;
    for (std::size_t k = 0; k < lags; ++k) {
        const auto lag = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(reach);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = static_cast<std::ptrdiff_t>(i) + lag;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
            acc += ca[i] * cb[static_cast<std::size_t>(j)];
        }
        out[k] = std::clamp(acc / norm, -1.0, 1.0);
    }
    return out;
}

/// Lag of the largest correlation value.
inline std::ptrdiff_t peak_lag(std::span<const double> xcorr) {
    const auto it = std::max_element(xcorr.begin(), xcorr.end());
    const auto reach = static_cast<std::ptrdiff_t>((xcorr.size() - 1) / 2);
    return (it - xcorr.begin()) - reach;
}

struct MetricReport {
    double ptp = 0.0;             // nT
    double variance = 0.0;        // nT^2
    double mean_magnitude = 0.0;  // nT
    double median_magnitude = 0.0;
    std::size_t n_samples = 0;
};

inline MetricReport evaluate(const SampleSeries& series) {
    if (series.empty()) throw argument_error("cannot evaluate an empty series");
    const auto m = magnitudes(series);
    MetricReport r;
    r.n_samples = m.size();
    const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
    r.ptp = *hi - *lo;
    r.variance = m.size() >= 2 ? detail::population_variance(m) : 0.0;
    double sum = 0.0;
    for (double x : m) sum += x;
    r.mean_magnitude = sum / static_cast<double>(m.size());
    r.median_magnitude = median(m);
    return r;
}

}  // namespace magcal
