#include "magcal/geocal.hpp"
#include "magcal/synth.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace magcal;

namespace {

SampleSeries magnitudes_series(std::initializer_list<double> m) {
    std::vector<Vec3> v;
    for (double x : m) v.emplace_back(0.0, x, 0.0);
    return make_series(v, 1.0);
}

Mat3 random_rotation(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return Eigen::Quaterniond(u(g), u(g), u(g), u(g)).normalized().toRotationMatrix();
}

}  // namespace

TEST(FieldEstimate, Examples) {
    EXPECT_DOUBLE_EQ(estimate_field_magnitude(magnitudes_series({1, 2, 100})), 2.0);
    EXPECT_DOUBLE_EQ(estimate_field_magnitude(magnitudes_series({5})), 5.0);
    EXPECT_THROW(estimate_field_magnitude(SampleSeries{}), Error);
}

TEST(FieldEstimate, NoisySphere) {
    DistortionTruth t;
    t.noise_sigma = 0.1;
    const auto raw = generate(t, SamplingPlan::full(100000, 1)).first;
    EXPECT_NEAR(estimate_field_magnitude(raw), 45000.0, 0.01);
}

TEST(BuildCorrection, Spheres) {
    EllipsoidParams e;
    e.semi_axes = Vec3::Constant(45000.0);
    auto m = build_correction(e, 45000.0);
    EXPECT_TRUE(m.matrix.isApprox(Mat3::Identity(), 1e-15));
    EXPECT_EQ(m.offset, Vec3::Zero());
    e.semi_axes = Vec3::Constant(90000.0);
    m = build_correction(e, 45000.0);
    EXPECT_TRUE(m.matrix.isApprox(0.5 * Mat3::Identity(), 1e-15));
}

TEST(BuildCorrection, SurfaceMapsToTargetMagnitude) {
    std::mt19937_64 g(2);
    EllipsoidParams e;
    e.semi_axes = Vec3(46000.0, 45100.0, 44000.0);
    e.rotation = random_rotation(g);
    e.center = Vec3(300.0, -20.0, 150.0);
    const auto m = build_correction(e, 45000.0);
    for (const auto& u : detail::fibonacci_cap(1000, 1.0))
        EXPECT_NEAR(m(e.surface_point(u)).norm() / 45000.0, 1.0, 1e-9);
}

TEST(Apply, IdentityAndOffset) {
    const auto raw = generate(DistortionTruth::typical(0.1), SamplingPlan::full(100, 3)).first;
    const auto same = apply(CalibrationModel{}, raw);
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_EQ(same[i], raw[i]);

    CalibrationModel shift;
    shift.offset = Vec3(10, 20, 30);
    const auto zeros = apply(shift, make_series(std::vector<Vec3>(5, shift.offset), 1.0));
    for (const auto& s : zeros.samples) EXPECT_EQ(s.b, Vec3::Zero());
}

TEST(CalibrateGeometric, SphereDataIsLeftAlone) {
    DistortionTruth t;
    const auto raw = generate(t, SamplingPlan::full(5000, 4)).first;
    const auto [m, rep] = calibrate_geometric(raw);
    EXPECT_LT((m.matrix - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(m.offset.norm(), 1e-6);
    EXPECT_NEAR(m.target_field, 45000.0, 1e-6);
    EXPECT_LT(rep.ptp, 1e-6);
    EXPECT_EQ(m.provenance, Provenance::geometric);
}

TEST(CalibrateGeometric, NoiseFloorAtFullCoverage) {
    const auto raw = generate(DistortionTruth::typical(0.1), SamplingPlan::full(100000, 5)).first;
    EXPECT_GT(ptp(raw), 100.0);
    const auto [m, rep] = calibrate_geometric(raw);
    EXPECT_LE(rep.ptp, 12 * 0.1);
    EXPECT_LT(rep.variance, 0.5);
}

TEST(CalibrateGeometric, ExactEllipsoidMagnitudes) {
    const auto truth = DistortionTruth::from_angles(Vec3(0.8, -0.5, 0.3) * kDegree, Vec3(1.04, 0.96, 1.01),
                                                    Vec3(4000, -3000, 2500), 0.0);
    const auto raw = generate(truth, SamplingPlan::full(10000, 6)).first;
    const auto [m, rep] = calibrate_geometric(raw);
    for (const auto& s : raw.samples) EXPECT_NEAR(m(s.b).norm() / m.target_field, 1.0, 1e-9);
}

TEST(CalibrateGeometric, IdempotentInMagnitude) {
    const auto raw = generate(DistortionTruth::typical(0.1), SamplingPlan::full(20000, 7)).first;
    const auto [m1, r1] = calibrate_geometric(raw);
    const auto once = apply(m1, raw);
    const auto [m2, r2] = calibrate_geometric(once);
    const auto twice = apply(m2, once);
    for (std::size_t i = 0; i < once.size(); ++i)
        EXPECT_NEAR(twice[i].norm() / once[i].norm(), 1.0, 1e-6);
}

TEST(CalibrateGeometric, RotationInvariantMetrics) {
    std::mt19937_64 g(8);
    const auto raw = generate(DistortionTruth::typical(0.3), SamplingPlan::full(20000, 8)).first;
    const Mat3 r = random_rotation(g);
    SampleSeries rotated = raw;
    for (auto& s : rotated.samples) s.b = r * s.b;
    const auto a = calibrate_geometric(raw).second;
    const auto b = calibrate_geometric(rotated).second;
    EXPECT_NEAR(b.ptp / a.ptp, 1.0, 1e-6);
    EXPECT_NEAR(b.variance / a.variance, 1.0, 1e-6);
}

TEST(CalibrateGeometric, OrthogonalFactorLeavesMagnitudes) {
    std::mt19937_64 g(9);
    const auto raw = generate(DistortionTruth::typical(0.1), SamplingPlan::full(5000, 9)).first;
    auto [m, rep] = calibrate_geometric(raw);
    CalibrationModel turned = m;
    turned.matrix = random_rotation(g) * m.matrix;
    const auto a = evaluate(apply(m, raw));
    const auto b = evaluate(apply(turned, raw));
    EXPECT_NEAR(a.ptp, b.ptp, 1e-8);
    EXPECT_NEAR(a.variance, b.variance, 1e-10);
}

TEST(CalibrationModel, Validate) {
    CalibrationModel m;
    EXPECT_NO_THROW(m.validate());
    m.matrix(1, 1) = 0.0;
    m.matrix(1, 0) = 0.0;
    EXPECT_THROW(m.validate(), Error);
    m = {};
    m.target_field = -1.0;
    EXPECT_THROW(m.validate(), Error);
    EXPECT_EQ(provenance_from_string(to_string(Provenance::neural)), Provenance::neural);
    EXPECT_THROW(provenance_from_string("magic"), Error);
}
