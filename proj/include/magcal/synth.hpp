#pragma once

#include "magcal/types.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace magcal {

inline constexpr double kDefaultField = 45000.0;  // nT
inline constexpr double kDegree = std::numbers::pi / 180.0;

/// Sensing-axis model: row i is the unit direction axis i responds to, scaled
/// by its gain. Axis 1 is the reference, axis 2 leans by v12 inside the
/// 1-2 plane, axis 3 leans by v13 and v23 out of it.
inline Mat3 soft_iron_from_angles(double v12, double v13, double v23, const Vec3& scales) {
    const double limit = 10.0 * kDegree;
    if (std::abs(v12) >= limit || std::abs(v13) >= limit || std::abs(v23) >= limit)
        throw argument_error("non-orthogonality angles must be below 10 degrees");
    if (!(scales.minCoeff() > 0.0)) throw argument_error("axis scale factors must be positive");
    const double s13 = std::sin(v13);
    const double s23c13 = std::sin(v23) * std::cos(v13);
    const double radicand = 1.0 - s13 * s13 - s23c13 * s23c13;
    if (!(radicand > 0.0)) throw numeric_error("non-orthogonality angles give a degenerate axis");
    Mat3 t;
    t << 1.0, 0.0, 0.0,
         std::sin(v12), std::cos(v12), 0.0,
         s13, s23c13, std::sqrt(radicand);
    return scales.asDiagonal() * t;
}

/// Ground truth of a simulated sensor: raw = soft_iron * ideal + hard_iron + noise.
struct DistortionTruth {
    Mat3 soft_iron = Mat3::Identity();
    Vec3 hard_iron = Vec3::Zero();  // nT
    double noise_sigma = 0.0;       // nT, per component
    double field = kDefaultField;   // nT
    // Construction parameters, when the matrix came from soft_iron_from_angles.
    std::optional<Vec3> angles;  // v12, v13, v23 in radians
    std::optional<Vec3> scales;

    static DistortionTruth from_angles(const Vec3& angles, const Vec3& scales, const Vec3& hard_iron,
                                       double noise_sigma, double field = kDefaultField) {
        DistortionTruth t;
        t.soft_iron = soft_iron_from_angles(angles.x(), angles.y(), angles.z(), scales);
        t.hard_iron = hard_iron;
        t.noise_sigma = noise_sigma;
        t.field = field;
        t.angles = angles;
        t.scales = scales;
        return t;
    }

    /// Mildly miscalibrated fluxgate: 0.5 degree skews, 0.3% gain errors.
    static DistortionTruth typical(double noise_sigma = 0.1, double field = kDefaultField) {
        return from_angles(Vec3::Constant(0.5 * kDegree), Vec3(1.003, 0.997, 1.003),
                           Vec3(200.0, -150.0, 80.0), noise_sigma, field);
    }

    void validate() const {
        if (!soft_iron.allFinite() || !(std::abs(soft_iron.determinant()) > 1e-12))
            throw argument_error("soft-iron matrix must be finite and invertible");
        if (!is_finite(hard_iron)) throw argument_error("hard-iron offset must be finite");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
            throw argument_error("noise sigma must be non-negative");
        if (!(field > 0.0) || !std::isfinite(field)) throw argument_error("field must be positive");
    }
};

enum class SamplingMode { uniform_full, uniform_cap, trajectory };

struct SamplingPlan {
    SamplingMode mode = SamplingMode::uniform_full;
    double fraction = 1.0;       // cap area fraction (uniform_cap)
    double rev_rate = 1.0;       // Hz (trajectory)
    double duration = 0.0;       // s (trajectory); > 0 overrides n_samples
    std::size_t n_samples = 100000;
    double sample_rate = 3000.0;  // Hz
    std::uint64_t seed = 0;

    static SamplingPlan full(std::size_t n, std::uint64_t seed = 0) {
        SamplingPlan p;
        p.n_samples = n;
        p.seed = seed;
        return p;
    }
    static SamplingPlan cap(double fraction, std::size_t n, std::uint64_t seed = 0) {
        SamplingPlan p = full(n, seed);
        p.mode = SamplingMode::uniform_cap;
        p.fraction = fraction;
        return p;
    }

    std::size_t resolved_samples() const {
        if (mode == SamplingMode::trajectory && duration > 0.0)
            return static_cast<std::size_t>(std::llround(duration * sample_rate));
        return n_samples;
    }

    void validate() const {
        if (resolved_samples() < 1) throw argument_error("sampling plan needs at least one sample");
        if (!(sample_rate > 0.0)) throw argument_error("sample rate must be positive");
        if (mode == SamplingMode::uniform_cap && !(fraction > 0.0 && fraction <= 1.0))
            throw argument_error("cap fraction must lie in (0, 1]");
        if (mode == SamplingMode::trajectory && !(rev_rate > 0.0))
            throw argument_error("revolution rate must be positive");
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based standard normal: depends only on (seed, index, component).
inline double counter_normal(std::uint64_t seed, std::uint64_t index, unsigned component) {
    const std::uint64_t key = splitmix64(seed) ^ splitmix64(index * 8 + component);
    const std::uint64_t a = splitmix64(key);
    const std::uint64_t b = splitmix64(a);
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Spherical Fibonacci lattice restricted to the cap z >= 1 - 2 f.
inline std::vector<Vec3> fibonacci_cap(std::size_t n, double fraction) {
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * fraction * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double theta = golden_angle * static_cast<double>(i);
        Vec3 d(r * std::cos(theta), r * std::sin(theta), z);
        out.push_back(d.normalized());
    }
    return out;
}

// Body spinning at rev_rate about an axis that wanders smoothly; the fixed
// field direction is observed in the body frame.
inline std::vector<Vec3> rotation_trajectory(std::size_t n, double sample_rate, double rev_rate,
                                             std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    Vec3 base(uniform() - 0.5, uniform() - 0.5, uniform() - 0.5);
    if (base.norm() < 1e-3) base = Vec3::UnitZ();
    base.normalize();
    Vec3 freq, phase;
    for (int k = 0; k < 3; ++k) {
        freq(k) = 2.0 * std::numbers::pi * (0.03 + 0.12 * uniform());
        phase(k) = 2.0 * std::numbers::pi * uniform();
    }
    const double dt = 1.0 / sample_rate;
    const double omega = 2.0 * std::numbers::pi * rev_rate;

    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back((q.conjugate() * Vec3::UnitZ()).normalized());
        const double t = static_cast<double>(i) * dt;
        Vec3 axis = base;
        for (int k = 0; k < 3; ++k) axis(k) += 0.8 * std::sin(freq(k) * t + phase(k));
        axis.normalize();
        q = (Eigen::Quaterniond(Eigen::AngleAxisd(omega * dt, axis)) * q).normalized();
    }
    return out;
}

}  // namespace detail

/// Unit field directions for `plan`.
inline std::vector<Vec3> sample_directions(const SamplingPlan& plan) {
    plan.validate();
    const std::size_t n = plan.resolved_samples();
    switch (plan.mode) {
        case SamplingMode::uniform_full: return detail::fibonacci_cap(n, 1.0);
        case SamplingMode::uniform_cap: return detail::fibonacci_cap(n, plan.fraction);
        case SamplingMode::trajectory:
            return detail::rotation_trajectory(n, plan.sample_rate, plan.rev_rate, plan.seed);
    }
    return {};
}

/// Simulated (raw, ideal) series. Sample i of the noise depends only on
/// (plan.seed, i), so any subrange can be regenerated independently.
inline std::pair<SampleSeries, SampleSeries> generate(const DistortionTruth& truth,
                                                      const SamplingPlan& plan) {
    truth.validate();
    const auto dirs = sample_directions(plan);
    SampleSeries raw, ideal;
    raw.sample_rate = ideal.sample_rate = plan.sample_rate;
    raw.label = "raw";
    ideal.label = "ideal";
    raw.samples.reserve(dirs.size());
    ideal.samples.reserve(dirs.size());
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const double t = static_cast<double>(i) / plan.sample_rate;
        const Vec3 s = truth.field * dirs[i];
        Vec3 r = truth.soft_iron * s + truth.hard_iron;
        if (truth.noise_sigma > 0.0) {
            for (unsigned k = 0; k < 3; ++k)
                r(k) += truth.noise_sigma * detail::counter_normal(plan.seed, i, k);
        }
        ideal.samples.push_back({t, s});
        raw.samples.push_back({t, r});
    }
    return {std::move(raw), std::move(ideal)};
}

}  // namespace magcal
