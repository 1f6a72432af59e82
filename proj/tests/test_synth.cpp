#include "magcal/ellipsoid.hpp"
#include "magcal/geocal.hpp"
#include "magcal/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace magcal;

TEST(SoftIron, Examples) {
    EXPECT_EQ(soft_iron_from_angles(0, 0, 0, Vec3::Ones()), Mat3::Identity());
    EXPECT_EQ(soft_iron_from_angles(0, 0, 0, Vec3(2, 1, 1)), Vec3(2, 1, 1).asDiagonal().toDenseMatrix());
    const Mat3 m = soft_iron_from_angles(1.0 * kDegree, 0, 0, Vec3::Ones());
    EXPECT_NEAR(m(1, 0), 0.0174524, 1e-7);
    EXPECT_NEAR(m(1, 1), 0.9998477, 1e-7);
    EXPECT_EQ(m(1, 2), 0.0);
}

TEST(SoftIron, UnitRowsBeforeScaling) {
    const Mat3 t = soft_iron_from_angles(0.7 * kDegree, -0.4 * kDegree, 0.9 * kDegree, Vec3::Ones());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(t.row(i).norm(), 1.0, 1e-12);
    EXPECT_THROW(soft_iron_from_angles(0.2, 0, 0, Vec3::Ones()), Error);  // > 10 degrees
    EXPECT_THROW(soft_iron_from_angles(0, 0, 0, Vec3(1, 0, 1)), Error);
}

TEST(SampleDirections, Shapes) {
    const auto two = sample_directions(SamplingPlan::full(2));
    ASSERT_EQ(two.size(), 2u);
    for (const auto& d : two) EXPECT_NEAR(d.norm(), 1.0, 1e-15);
    EXPECT_LT(two[0].dot(two[1]), 0.0);

    Vec3 mean = Vec3::Zero();
    for (const auto& d : sample_directions(SamplingPlan::full(1000000))) mean += d;
    EXPECT_LT((mean / 1e6).norm(), 0.01);

    for (const auto& d : sample_directions(SamplingPlan::cap(0.5, 100000))) EXPECT_GE(d.z(), 0.0);
    EXPECT_THROW(sample_directions(SamplingPlan::full(0)), Error);
    EXPECT_THROW(sample_directions(SamplingPlan::cap(0.0, 10)), Error);
}

TEST(SampleDirections, Trajectory) {
    SamplingPlan p;
    p.mode = SamplingMode::trajectory;
    p.duration = 2.0;
    p.sample_rate = 1000.0;
    p.seed = 3;
    const auto d = sample_directions(p);
    ASSERT_EQ(d.size(), 2000u);
    double max_step = 0.0;
    for (std::size_t i = 1; i < d.size(); ++i) max_step = std::max(max_step, (d[i] - d[i - 1]).norm());
    // 1 rev/s at 1 kHz: at most 2 pi / 1000 per step.
    EXPECT_LT(max_step, 6.3e-3);
    EXPECT_EQ(sample_directions(p), d);
}

TEST(Generate, IdentityTruth) {
    const auto [raw, ideal] = generate(DistortionTruth{}, SamplingPlan::full(500));
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_EQ(raw[i], ideal[i]);
    EXPECT_NO_THROW(raw.validate());
    EXPECT_TRUE(raw.rate_consistent());
}

TEST(Generate, HardIronBounds) {
    DistortionTruth t;
    t.hard_iron = Vec3(100, 0, 0);
    const auto raw = generate(t, SamplingPlan::full(20000)).first;
    const auto rep = evaluate(raw);
    const auto m = magnitudes(raw);
    EXPECT_GE(*std::min_element(m.begin(), m.end()), t.field - 100 - 1e-9);
    EXPECT_LE(*std::max_element(m.begin(), m.end()), t.field + 100 + 1e-9);
    EXPECT_GT(rep.ptp, 199.0);
}

TEST(Generate, TypicalDistortionEndToEnd) {
    const auto raw = generate(DistortionTruth::typical(0.1), SamplingPlan::full(100000, 1)).first;
    const double before = ptp(raw);
    EXPECT_GT(before, 100.0);
    EXPECT_LT(before, 10000.0);
    EXPECT_LE(calibrate_geometric(raw).second.ptp, 12 * 0.1);
}

TEST(Generate, NoiselessSamplesOnEllipsoid) {
    const auto raw = generate(DistortionTruth::typical(0.0), SamplingPlan::full(5000, 2)).first;
    std::vector<Vec3> pts;
    for (const auto& s : raw.samples) pts.push_back(s.b);
    const auto q = fit_quadric(pts);
    for (const auto& p : pts) EXPECT_LT(std::abs(algebraic_residual(q, p)), 1e-8);
}

TEST(Generate, DeterministicAndNoiseLevel) {
    const auto truth = DistortionTruth::typical(0.3);
    auto clean = truth;
    clean.noise_sigma = 0.0;
    const auto plan = SamplingPlan::full(100000, 5);
    const auto a = generate(truth, plan).first;
    const auto b = generate(truth, plan).first;
    const auto c = generate(clean, plan).first;
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
    for (int k = 0; k < 3; ++k) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double e = a[i](k) - c[i](k);
            sum += e;
            sq += e * e;
        }
        const double n = static_cast<double>(a.size());
        const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
        EXPECT_NEAR(sd / truth.noise_sigma, 1.0, 0.03);
    }
    auto other = plan;
    other.seed = 6;
    EXPECT_NE(generate(truth, other).first[0], a[0]);
}

TEST(DistortionTruth, Validation) {
    DistortionTruth t;
    t.noise_sigma = -1.0;
    EXPECT_THROW(t.validate(), Error);
    t = {};
    t.soft_iron.setZero();
    EXPECT_THROW(t.validate(), Error);
}
