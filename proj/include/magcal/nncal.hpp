#pragma once

#include "magcal/geocal.hpp"
#include "magcal/project.hpp"
#include "magcal/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace magcal {

/// Two stacked 3x3 linear layers acting on row vectors:
///   out = (in W1 + b1) W2 + b2 = in (W1 W2) + (b1 W2 + b2).
/// Biases are stored as column vectors; `w1(i, j)` connects input i to hidden j.
struct LinearNet {
    Mat3 w1 = Mat3::Identity();
    Vec3 b1 = Vec3::Zero();
    Mat3 w2 = Mat3::Identity();
    Vec3 b2 = Vec3::Zero();
    std::uint64_t seed = 0;

    static LinearNet identity() { return {}; }

    bool all_finite() const {
        return w1.allFinite() && w2.allFinite() && is_finite(b1) && is_finite(b2);
    }

    /// Combined row-vector matrix W1 W2.
    Mat3 combined_matrix() const { return w1 * w2; }
    /// Combined bias b1 W2 + b2 (as a column vector).
    Vec3 combined_bias() const { return w2.transpose() * b1 + b2; }

    LinearNet& operator-=(const LinearNet& g) {
        w1 -= g.w1;
        b1 -= g.b1;
        w2 -= g.w2;
        b2 -= g.b2;
        return *this;
    }
    LinearNet& operator*=(double s) {
        w1 *= s;
        b1 *= s;
        w2 *= s;
        b2 *= s;
        return *this;
    }

    static LinearNet zero() { return {Mat3::Zero(), Vec3::Zero(), Mat3::Zero(), Vec3::Zero(), 0}; }
};

/// Per-neuron multipliers for the six hidden units: entries 0-2 scale the
/// first layer's outputs, 3-5 the second's. 0 drops a unit.
using DropoutMask = std::array<double, 6>;
inline constexpr DropoutMask kNoDropout = {1, 1, 1, 1, 1, 1};
inline constexpr int kHiddenUnits = 6;

struct TrainConfig {
    std::size_t epochs = 3000;
    double learning_rate = 0.05;
    int dropout_count = 2;
    std::size_t dropout_period = 30;
    // Mini-batches the dropout mask stays active at the start of a dropout
    // epoch; 0 keeps it for the whole epoch.
    std::size_t dropout_batches = 1;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    // After `anchor_epochs` epochs against the fixed projected targets, each
    // target is re-projected from the network's current output.
    bool reproject_targets = true;
    std::size_t anchor_epochs = 3;
    // Train on mean-removed, whitened inputs and fold the transform back into
    // layer 1 afterwards. Leaves the represented function class unchanged but
    // keeps gradient descent well conditioned when the data cover a small cap.
    bool standardize_inputs = true;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw argument_error("learning rate must be positive");
        if (dropout_count < 0 || dropout_count >= kHiddenUnits)
            throw argument_error("dropout count must be in [0, 6)");
        if (dropout_count > 0 && dropout_period == 0)
            throw argument_error("dropout period must be positive");
        if (batch_size == 0) throw argument_error("batch size must be positive");
        if (epochs == 0) throw argument_error("epoch count must be positive");
    }
};

struct TrainReport {
    std::vector<double> loss_curve;  // nT^2, one entry per epoch
    double initial_loss = 0.0;       // nT^2
    double final_loss = 0.0;         // nT^2, of the returned network
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;      // completed epochs at the returned checkpoint
    std::uint64_t seed = 0;
};

namespace detail {

inline double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Weights uniform on [-1, 1) (standard deviation 1/sqrt(3), the fan-in scale
/// of a 3-wide layer), biases zero.
inline LinearNet init_net(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    LinearNet net = LinearNet::zero();
    net.seed = seed;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) net.w1(i, j) = 2.0 * detail::unit_uniform(gen) - 1.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) net.w2(i, j) = 2.0 * detail::unit_uniform(gen) - 1.0;
    return net;
}

inline Vec3 forward(const LinearNet& net, const Vec3& v) {
    const Vec3 h = net.w1.transpose() * v + net.b1;
    return net.w2.transpose() * h + net.b2;
}

inline Vec3 forward(const LinearNet& net, const Vec3& v, const DropoutMask& mask) {
    const Vec3 h = (net.w1.transpose() * v + net.b1).cwiseProduct(Vec3(mask[0], mask[1], mask[2]));
    return (net.w2.transpose() * h + net.b2).cwiseProduct(Vec3(mask[3], mask[4], mask[5]));
}

/// Mean squared error over samples and components, with its gradient.
struct LossGradient {
    double loss = 0.0;
    LinearNet grad = LinearNet::zero();
};

inline LossGradient loss_and_gradient(const LinearNet& net, std::span<const Vec3> inputs,
                                      std::span<const Vec3> targets,
                                      const DropoutMask& mask = kNoDropout) {
    if (inputs.size() != targets.size() || inputs.empty())
        throw argument_error("loss_and_gradient: inputs and targets must be non-empty and equal");
    const Vec3 m1(mask[0], mask[1], mask[2]);
    const Vec3 m2(mask[3], mask[4], mask[5]);
    const double coef = 2.0 / (3.0 * static_cast<double>(inputs.size()));
    LossGradient out;
    double acc = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Vec3& x = inputs[i];
        const Vec3 h = (net.w1.transpose() * x + net.b1).cwiseProduct(m1);
        const Vec3 y = (net.w2.transpose() * h + net.b2).cwiseProduct(m2);
        const Vec3 r = y - targets[i];
        acc += r.squaredNorm();
        const Vec3 gz = (coef * r).cwiseProduct(m2);
        out.grad.w2.noalias() += h * gz.transpose();
        out.grad.b2 += gz;
        const Vec3 gh = (net.w2 * gz).cwiseProduct(m1);
        out.grad.w1.noalias() += x * gh.transpose();
        out.grad.b1 += gh;
    }
    out.loss = acc / (3.0 * static_cast<double>(inputs.size()));
    return out;
}

namespace detail {

// Second moments of one mini-batch. The network is affine in its input, so
// the MSE gradient depends on the batch only through these sums.
struct BatchMoments {
    Mat3 xx = Mat3::Zero();  // sum x x^T
    Mat3 xt = Mat3::Zero();  // sum x t^T
    Vec3 x = Vec3::Zero();
    Vec3 t = Vec3::Zero();
    std::size_t n = 0;

    void add(const Vec3& xi, const Vec3& ti) {
        xx.noalias() += xi * xi.transpose();
        xt.noalias() += xi * ti.transpose();
        x += xi;
        t += ti;
        ++n;
    }
};

// Same gradient as loss_and_gradient, from the batch moments.
inline LinearNet moment_gradient(const LinearNet& net, const BatchMoments& m, const DropoutMask& mask) {
    const Vec3 m1(mask[0], mask[1], mask[2]);
    const Vec3 m2(mask[3], mask[4], mask[5]);
    const Mat3 w1m = net.w1 * m1.asDiagonal();  // W1 M1
    const Mat3 w2m = net.w2 * m2.asDiagonal();  // W2 M2
    const Mat3 a = w1m * w2m;                   // y = A^T x + c
    const Vec3 c = w2m.transpose() * m1.cwiseProduct(net.b1) + m2.cwiseProduct(net.b2);
    const Mat3 xr = m.xx * a + m.x * c.transpose() - m.xt;  // sum x r^T
    const Vec3 r = a.transpose() * m.x + static_cast<double>(m.n) * c - m.t;  // sum r
    const double coef = 2.0 / (3.0 * static_cast<double>(m.n));

    LinearNet g = LinearNet::zero();
    const Mat3 hr = net.w1.transpose() * xr + net.b1 * r.transpose();  // sum (W1^T x + b1) r^T
    g.w2 = coef * m1.asDiagonal() * hr * m2.asDiagonal();
    g.b2 = coef * m2.cwiseProduct(r);
    g.w1 = coef * xr * w2m.transpose() * m1.asDiagonal();
    g.b1 = coef * m1.cwiseProduct(w2m * r);
    return g;
}

inline DropoutMask draw_dropout(std::mt19937_64& gen, int count) {
    std::array<int, kHiddenUnits> idx{};
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first `count` entries are the dropped units.
    for (int i = 0; i < count; ++i) {
        const auto span = static_cast<std::uint64_t>(kHiddenUnits - i);
        const auto j = i + static_cast<int>(gen() % span);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    DropoutMask mask;
    const double keep = static_cast<double>(kHiddenUnits) / (kHiddenUnits - count);
    mask.fill(keep);
    for (int i = 0; i < count; ++i) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 0.0;
    return mask;
}

struct EpochPass {
    double target_loss = 0.0;     // MSE against the targets in force
    double magnitude_loss = 0.0;  // mean (|y| - 1)^2 / 3
};

// One full-network pass: losses against `targets`, and (optionally) the radial
// projections of the outputs written to `next_targets`.
inline EpochPass evaluate_epoch(const LinearNet& net, std::span<const Vec3> x,
                                std::span<const Vec3> targets, std::vector<Vec3>* next_targets) {
    EpochPass out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Vec3 y = forward(net, x[i]);
        out.target_loss += (y - targets[i]).squaredNorm();
        const double norm = y.norm();
        out.magnitude_loss += (norm - 1.0) * (norm - 1.0);
        if (next_targets) (*next_targets)[i] = norm > 0.0 ? Vec3(y / norm) : targets[i];
    }
    const double denom = 3.0 * static_cast<double>(x.size());
    out.target_loss /= denom;
    out.magnitude_loss /= denom;
    return out;
}

}  // namespace detail

/// Mini-batch gradient descent on the MSE between the network output and the
/// sphere targets, in field-normalized units.
///
/// Epochs run in a seeded shuffled order. On every `dropout_period`-th epoch,
/// `dropout_count` of the six hidden units are zeroed for that epoch and the
/// survivors scaled by 6/(6 - dropout_count). With `reproject_targets`, the
/// first `anchor_epochs` epochs fit the fixed projections from `pairs`; after
/// that, each epoch starts by replacing every target with the radial
/// projection of the full network's current output and holds it for the
/// epoch. A single regression onto fixed projections of uncentered data only
/// shrinks the offset and anisotropy; iterating the projection converges to the
/// scalar calibration.
///
/// The returned network is the full-network checkpoint with the lowest loss
/// (target MSE for fixed targets, magnitude error when re-projecting), the
/// untrained starting network included. Throws numeric_error when the loss
/// becomes non-finite or exceeds 1e6 x max(initial loss, field^2).
inline std::pair<LinearNet, TrainReport> train(const TrainingPairs& pairs, const TrainConfig& cfg,
                                               std::optional<LinearNet> initial = std::nullopt) {
    cfg.validate();
    const std::size_t n = pairs.inputs.size();
    if (n == 0) throw argument_error("cannot train on empty pairs");
    if (pairs.targets.size() != n) throw argument_error("training pairs differ in length");
    if (!(pairs.field > 0.0)) throw argument_error("training field must be positive");

    const double field = pairs.field;
    const double inv = 1.0 / field;
    std::vector<Vec3> x(n), fixed(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = pairs.inputs[i] * inv;
        fixed[i] = pairs.targets[i] * inv;
    }

    // x_train = P (x - mu); a layer-1 (W, b) on x_train equals (P W, b - (P W)^T mu) on x.
    Vec3 mu = Vec3::Zero();
    Mat3 p = Mat3::Identity();
    if (cfg.standardize_inputs && n > 3) {
        for (const auto& v : x) mu += v;
        mu /= static_cast<double>(n);
        Mat3 cov = Mat3::Zero();
        for (const auto& v : x) cov += (v - mu) * (v - mu).transpose();
        cov /= static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        const Vec3 ev = eig.eigenvalues();
        if (eig.info() == Eigen::Success && ev.minCoeff() > 1e-12 * ev.maxCoeff()) {
            p = eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                eig.eigenvectors().transpose();
            for (auto& v : x) v = p * (v - mu);
        } else {
            mu.setZero();
        }
    }
    auto fold = [&](LinearNet m) {
        m.w1 = p * m.w1;
        m.b1 -= m.w1.transpose() * mu;
        return m;
    };

    LinearNet net = init_net(cfg.seed);
    if (initial) {
        net = *initial;
        net.b1 += net.w1.transpose() * mu;
        net.w1 = p.inverse() * net.w1;
    }
    if (!net.all_finite()) throw argument_error("initial network has non-finite parameters");

    auto reprojecting = [&](std::size_t epoch) {
        return cfg.reproject_targets && epoch >= cfg.anchor_epochs;
    };
    const bool final_reprojecting = reprojecting(cfg.epochs - 1);
    auto score = [&](const detail::EpochPass& p) {
        return final_reprojecting ? p.magnitude_loss : p.target_loss;
    };

    std::vector<Vec3> targets = fixed;
    std::vector<Vec3> projected(n);
    const auto start = detail::evaluate_epoch(net, x, targets, &projected);

    TrainReport report;
    report.seed = cfg.seed;
    report.loss_curve.reserve(cfg.epochs);
    report.initial_loss = start.target_loss * field * field;
    const double divergence_limit = 1e6 * std::max(start.target_loss, 1.0);

    LinearNet best = net;
    double best_score = score(start);
    std::size_t best_epoch = 0;

    std::mt19937_64 gen(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const bool drop = cfg.dropout_count > 0 && (epoch + 1) % cfg.dropout_period == 0;
        const DropoutMask mask = drop ? detail::draw_dropout(gen, cfg.dropout_count) : kNoDropout;
        if (reprojecting(epoch)) targets.swap(projected);

        for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[gen() % (i + 1)]);

        std::size_t batch = 0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size, ++batch) {
            const std::size_t stop = std::min(n, begin + cfg.batch_size);
            const bool masked = drop && (cfg.dropout_batches == 0 || batch < cfg.dropout_batches);
            detail::BatchMoments mom;
            for (std::size_t k = begin; k < stop; ++k) mom.add(x[order[k]], targets[order[k]]);
            auto grad = detail::moment_gradient(net, mom, masked ? mask : kNoDropout);
            grad *= cfg.learning_rate;
            net -= grad;
        }

        const auto pass = detail::evaluate_epoch(net, x, targets, &projected);
        report.loss_curve.push_back(pass.target_loss * field * field);
        if (!std::isfinite(pass.target_loss) || !net.all_finite() ||
            pass.target_loss > divergence_limit)
            throw numeric_error("training diverged at epoch " + std::to_string(epoch + 1) +
                                " (loss " + std::to_string(pass.target_loss * field * field) +
                                " nT^2)");
        if (reprojecting(epoch) == final_reprojecting && score(pass) < best_score) {
            best_score = score(pass);
            best = net;
            best_epoch = epoch + 1;
        }
    }

    report.epochs_run = cfg.epochs;
    report.best_epoch = best_epoch;
    report.final_loss = best_score * field * field;
    best = fold(best);
    best.seed = cfg.seed;
    return {best, std::move(report)};
}

/// Equivalent affine model: apply(model, s) == field * forward(net, s / field).
inline CalibrationModel export_model(const LinearNet& net, double field) {
    if (!(field > 0.0)) throw argument_error("export field must be positive");
    const Mat3 m = net.combined_matrix().transpose();
    const double det = m.determinant();
    if (!(std::abs(det) > 1e-12) || !std::isfinite(det))
        throw numeric_error("network's combined matrix is singular");
    CalibrationModel model;
    model.matrix = m;
    model.offset = -m.partialPivLu().solve(field * net.combined_bias());
    model.target_field = field;
    model.provenance = Provenance::neural;
    return model;
}

/// Median field, sphere targets, training and export.
struct NeuralCalibration {
    CalibrationModel model;
    LinearNet net;
    TrainReport train;
    MetricReport report;
};

inline NeuralCalibration calibrate_neural(const SampleSeries& raw, const TrainConfig& cfg,
                                          double target_field = 0.0) {
    const double field = target_field > 0.0 ? target_field : estimate_field_magnitude(raw);
    const auto pairs = build_training_pairs(raw, field);
    auto [net, rep] = train(pairs, cfg);
    NeuralCalibration out;
    out.model = export_model(net, field);
    out.net = net;
    out.train = std::move(rep);
    out.report = evaluate(apply(out.model, raw));
    return out;
}

}  // namespace magcal
