#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace magcal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Failure classes. The CLI maps each to a distinct exit status.
enum class ErrorKind { argument, parse, numeric, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error argument_error(const std::string& what) { return {ErrorKind::argument, what}; }
inline Error parse_error(const std::string& what) { return {ErrorKind::parse, what}; }
inline Error numeric_error(const std::string& what) { return {ErrorKind::numeric, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::io, what}; }

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

struct Sample {
    double t = 0.0;  // seconds
    Vec3 b = Vec3::Zero();  // nT
};

/// Time-stamped sequence of field vectors. Timestamps are strictly increasing
/// and every vector is finite; `validate()` enforces both.
struct SampleSeries {
    std::vector<Sample> samples;
    double sample_rate = 1.0;  // Hz
    std::string label;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    const Vec3& operator[](std::size_t i) const { return samples[i].b; }

    void validate() const {
        if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
            throw argument_error("sample rate must be positive and finite");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!std::isfinite(samples[i].t) || !is_finite(samples[i].b))
                throw argument_error("non-finite value in sample " + std::to_string(i));
            if (i > 0 && !(samples[i].t > samples[i - 1].t))
                throw argument_error("timestamps not strictly increasing at sample " +
                                     std::to_string(i));
        }
    }

    /// True when the mean sampling interval agrees with `sample_rate` within 1%.
    bool rate_consistent() const {
        if (samples.size() < 2) return true;
        const double span = samples.back().t - samples.front().t;
        const double measured = static_cast<double>(samples.size() - 1) / span;
        return std::abs(measured - sample_rate) <= 0.01 * sample_rate;
    }
};

/// Builds a uniformly sampled series starting at t = 0.
inline SampleSeries make_series(const std::vector<Vec3>& vectors, double sample_rate,
                                std::string label = {}) {
    SampleSeries s;
    s.sample_rate = sample_rate;
    s.label = std::move(label);
    s.samples.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        s.samples.push_back({static_cast<double>(i) / sample_rate, vectors[i]});
    return s;
}

}  // namespace magcal
