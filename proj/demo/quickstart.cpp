// Simulate a distorted magnetometer, calibrate it both ways, and compare.
#include "magcal/magcal.hpp"

#include <cstdio>

using namespace magcal;

int main() {
    const auto truth = DistortionTruth::typical(0.1);
    const auto [raw, ideal] = generate(truth, SamplingPlan::full(100000, 1));
    std::printf("raw:   ptp %9.3f nT  variance %10.4f nT^2\n", ptp(raw), magnitude_variance(raw));

    const auto [geo_model, geo] = calibrate_geometric(raw);
    std::printf("geo:   ptp %9.3f nT  variance %10.4f nT^2\n", geo.ptp, geo.variance);

    TrainConfig cfg;
    cfg.epochs = 500;
    const auto nn = calibrate_neural(raw, cfg);
    std::printf("nn:    ptp %9.3f nT  variance %10.4f nT^2  (%zu epochs)\n", nn.report.ptp, nn.report.variance,
                nn.train.epochs_run);

    const auto cov = coverage(raw);
    std::printf("coverage: %.2f%%\n", 100.0 * cov.percent);
    std::printf("offset estimate: %.2f %.2f %.2f nT (truth %.2f %.2f %.2f)\n", geo_model.offset.x(),
                geo_model.offset.y(), geo_model.offset.z(), truth.hard_iron.x(), truth.hard_iron.y(),
                truth.hard_iron.z());
    (void)ideal;
    return 0;
}
