#include "magcal/io.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace magcal;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "magcal_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(MAGCAL_CLI) + " " + args + " >" + (kWork / "stdout.txt").string() +
                            " 2>" + (kWork / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string path(const std::string& name) { return (kWork / name).string(); }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        ASSERT_EQ(run("simulate --output " + path("sim") + " --samples 100000 --sigma 0.1 --seed 3"), 0)
            << slurp(kWork / "stderr.txt");
    }
};

}  // namespace

TEST_F(Cli, SimulateWritesSeriesAndTruth) {
    for (const char* f : {"raw.csv", "ideal.csv", "truth.json"}) EXPECT_TRUE(fs::exists(kWork / "sim" / f)) << f;
    EXPECT_EQ(io::read_series_csv(path("sim/raw.csv")).size(), 100000u);
    const auto [truth, plan] = io::truth_from_json(io::read_json(path("sim/truth.json")));
    EXPECT_EQ(truth.noise_sigma, 0.1);
    EXPECT_EQ(plan.seed, 3u);
}

TEST_F(Cli, CalibrateGeoReachesNoiseFloor) {
    ASSERT_EQ(run("calibrate-geo --input " + path("sim/raw.csv") + " --output " + path("geo.json")), 0)
        << slurp(kWork / "stderr.txt");
    const auto rep = io::read_json(path("geo.report.json"));
    for (const char* k : {"ptp_before", "ptp_after", "var_before", "var_after"}) EXPECT_TRUE(rep.contains(k)) << k;
    EXPECT_GT(rep["ptp_before"].get<double>(), 100.0);
    EXPECT_LE(rep["ptp_after"].get<double>(), 12 * 0.1);

    ASSERT_EQ(run("evaluate --input " + path("sim/raw.csv") + " --model " + path("geo.json")), 0);
    const auto ev = io::json::parse(slurp(kWork / "stdout.txt"));
    EXPECT_NEAR(ev["ptp"].get<double>(), rep["ptp_after"].get<double>(), 1e-9);

    ASSERT_EQ(run("apply --input " + path("sim/raw.csv") + " --model " + path("geo.json") + " --output " +
                  path("corrected.csv")),
              0);
    EXPECT_NEAR(ptp(io::read_series_csv(path("corrected.csv"))), rep["ptp_after"].get<double>(), 1e-9);
}

TEST_F(Cli, CalibrateNnWritesNetwork) {
    ASSERT_EQ(run("calibrate --method nn --epochs 200 --input " + path("sim/raw.csv") + " --output " +
                  path("nn.json")),
              0)
        << slurp(kWork / "stderr.txt");
    const auto model = io::model_from_json(io::read_json(path("nn.json")));
    EXPECT_EQ(model.provenance, Provenance::neural);
    EXPECT_TRUE(fs::exists(kWork / "nn.net.json"));
    const auto rep = io::read_json(path("nn.report.json"));
    EXPECT_EQ(rep["training"]["epochs_run"].get<std::size_t>(), 200u);
    EXPECT_LT(rep["ptp_after"].get<double>(), 2.0);
}

TEST_F(Cli, SphereGivesIdentity) {
    io::write_series_csv(path("sphere.csv"),
                         make_series([] {
                             std::vector<Vec3> v;
                             for (const auto& d : detail::fibonacci_cap(5000, 1.0)) v.push_back(45000.0 * d);
                             return v;
                         }(),
                                     100.0));
    ASSERT_EQ(run("calibrate-geo --input " + path("sphere.csv") + " --output " + path("sphere.json")), 0);
    const auto m = io::model_from_json(io::read_json(path("sphere.json")));
    EXPECT_LT((m.matrix - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(m.offset.norm(), 1e-6);
}

TEST_F(Cli, CoverageReport) {
    ASSERT_EQ(run("coverage --input " + path("sim/raw.csv") + " --n-theta 40 --n-phi 20"), 0);
    const auto j = io::json::parse(slurp(kWork / "stdout.txt"));
    EXPECT_EQ(j["percent"].get<double>(), 1.0);
}

TEST_F(Cli, SweepWritesCsv) {
    ASSERT_EQ(run("sweep --method geo --coverages 0.5,1.0 --sigmas 0.1 --seeds 1 --samples 5000 --test-samples 5000 "
                  "--output " + path("sweep.csv") + " --report " + path("time.json")),
              0)
        << slurp(kWork / "stderr.txt");
    std::istringstream csv(slurp(kWork / "sweep.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    EXPECT_EQ(lines, 3);
    EXPECT_NEAR(io::read_json(path("time.json"))["minutes"].get<double>(), 2.0 * 0.6 / 0.26, 1e-12);
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("calibrate-geo --bogus"), 2);
    EXPECT_EQ(run("calibrate --method ga --input x --output y"), 2);
    EXPECT_EQ(run("simulate --output " + path("empty") + " --samples 0"), 2);
    EXPECT_EQ(run("sweep --coverages 0 --seeds 1"), 2);

    std::ofstream(path("bad.csv")) << "t,bx,by,bz\n0,1,2,3\n1,1,oops,3\n";
    EXPECT_EQ(run("calibrate-geo --input " + path("bad.csv") + " --output " + path("bad.json")), 3);
    EXPECT_NE(slurp(kWork / "stderr.txt").find("line 3"), std::string::npos);
    std::ofstream(path("bad_model.json")) << "{\"matrix\": 1}";
    EXPECT_EQ(run("apply --input " + path("sim/raw.csv") + " --model " + path("bad_model.json") + " --output " +
                  path("x.csv")),
              3);

    EXPECT_EQ(run("calibrate-geo --input " + path("missing.csv") + " --output " + path("m.json")), 5);

    std::vector<Vec3> ring;
    for (int i = 0; i < 200; ++i) ring.emplace_back(45000 * std::cos(0.03 * i), 45000 * std::sin(0.03 * i), 0.0);
    io::write_series_csv(path("ring.csv"), make_series(ring, 100.0));
    EXPECT_EQ(run("calibrate-geo --input " + path("ring.csv") + " --output " + path("ring.json")), 4);
}
