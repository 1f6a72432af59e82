#pragma once

#include "magcal/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace magcal {

/// Angular grid over theta in [0, 2 pi) (azimuth) and phi in [0, pi] (polar).
struct GridSpec {
    std::size_t n_theta = 500;
    std::size_t n_phi = 400;
    double threshold = 1e-4;  // bound on d_theta * d_phi for the unit sphere

    double d_theta() const { return 2.0 * std::numbers::pi / static_cast<double>(n_theta); }
    double d_phi() const { return std::numbers::pi / static_cast<double>(n_phi); }
    bool meets_threshold() const { return d_theta() * d_phi() <= threshold; }

    void validate() const {
        if (n_theta == 0 || n_phi == 0) throw argument_error("coverage grid must be non-empty");
    }
};

/// Occupancy counts per (theta, phi) cell.
class CoverageGrid {
public:
    explicit CoverageGrid(GridSpec spec = {}) : spec_(spec) {
        spec_.validate();
        counts_.assign(spec_.n_theta * spec_.n_phi, 0);
    }

    const GridSpec& spec() const { return spec_; }

    std::pair<std::size_t, std::size_t> cell_of(const Vec3& v) const {
        const double n = v.norm();
        if (n == 0.0) throw numeric_error("zero vector has no direction");
        double theta = std::atan2(v.y(), v.x());
        if (theta < 0.0) theta += 2.0 * std::numbers::pi;
        const double phi = std::acos(std::clamp(v.z() / n, -1.0, 1.0));
        auto it = static_cast<std::size_t>(theta / spec_.d_theta());
        auto ip = static_cast<std::size_t>(phi / spec_.d_phi());
        return {std::min(it, spec_.n_theta - 1), std::min(ip, spec_.n_phi - 1)};
    }

    void add(const Vec3& v) {
        const auto [it, ip] = cell_of(v);
        ++counts_[it * spec_.n_phi + ip];
        ++n_samples_;
    }

    std::size_t count(std::size_t it, std::size_t ip) const { return counts_[it * spec_.n_phi + ip]; }
    std::size_t n_samples() const { return n_samples_; }

    /// Solid angle of a cell in row ip: d_theta (cos phi_lo - cos phi_hi).
    double cell_area(std::size_t ip) const {
        const double lo = static_cast<double>(ip) * spec_.d_phi();
        const double hi = static_cast<double>(ip + 1) * spec_.d_phi();
        return spec_.d_theta() * (std::cos(lo) - std::cos(hi));
    }

private:
    GridSpec spec_;
    std::vector<std::size_t> counts_;
    std::size_t n_samples_ = 0;
};

struct CoverageReport {
    double percent = 0.0;  // covered fraction of the sphere's solid angle, in [0, 1]
    std::vector<std::pair<double, double>> bald_cells;  // (theta, phi) cell centers
    std::size_t n_samples = 0;
    GridSpec grid;
};

inline CoverageReport summarize(const CoverageGrid& grid) {
    const auto& spec = grid.spec();
    CoverageReport r;
    r.grid = spec;
    r.n_samples = grid.n_samples();
    double covered = 0.0;
    for (std::size_t ip = 0; ip < spec.n_phi; ++ip) {
        const double area = grid.cell_area(ip);
        const double phi_c = (static_cast<double>(ip) + 0.5) * spec.d_phi();
        for (std::size_t it = 0; it < spec.n_theta; ++it) {
            if (grid.count(it, ip) > 0) {
                covered += area;
            } else {
                r.bald_cells.emplace_back((static_cast<double>(it) + 0.5) * spec.d_theta(), phi_c);
            }
        }
    }
    r.percent = r.bald_cells.empty() ? 1.0 : std::clamp(covered / (4.0 * std::numbers::pi), 0.0, 1.0);
    return r;
}

/// Fraction of the direction sphere reached by the samples of `series`.
inline CoverageReport coverage(const SampleSeries& series, const GridSpec& spec = {}) {
    if (series.empty()) throw argument_error("coverage of an empty series");
    CoverageGrid grid(spec);
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].isZero())
            throw numeric_error("zero-vector sample at index " + std::to_string(i));
        grid.add(series[i]);
    }
    return summarize(grid);
}

}  // namespace magcal
