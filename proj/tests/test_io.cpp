#include "magcal/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

using namespace magcal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "magcal_io_test";
    fs::create_directories(dir);
    return dir / name;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::io;
}

}  // namespace

TEST(SeriesCsv, RoundTripIsExact) {
    auto raw = generate(DistortionTruth::typical(0.3), SamplingPlan::full(2000, 1)).first;
    raw.label = "bench run";
    std::stringstream ss;
    io::write_series_csv(ss, raw);
    const auto back = io::read_series_csv(ss);
    ASSERT_EQ(back.size(), raw.size());
    EXPECT_EQ(back.sample_rate, raw.sample_rate);
    EXPECT_EQ(back.label, raw.label);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        ASSERT_EQ(back.samples[i].t, raw.samples[i].t);
        ASSERT_EQ(back[i], raw[i]);
    }
}

TEST(SeriesCsv, InfersRateWithoutComment) {
    std::stringstream ss("t,bx,by,bz\n0,1,2,3\n0.5,1,2,3\n1.0,1,2,3\n");
    EXPECT_DOUBLE_EQ(io::read_series_csv(ss).sample_rate, 2.0);
}

TEST(SeriesCsv, ParseErrorsCarryLineNumbers) {
    auto fails_at = [](const std::string& text, const std::string& needle) {
        std::stringstream ss(text);
        try {
            io::read_series_csv(ss);
            ADD_FAILURE() << "accepted: " << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::parse);
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    fails_at("x,y\n", "line 1");
    fails_at("t,bx,by,bz\n0,1,2,3\n1,1,abc,3\n", "line 3");
    fails_at("t,bx,by,bz\n0,1,2\n", "line 2");
    fails_at("t,bx,by,bz\n0,1,2,3,4\n", "line 2");
    fails_at("# sample_rate: 10\nt,bx,by,bz\n0,1,2,3\n0,1,2,3\n", "line 4");
    fails_at("t,bx,by,bz\n0,1,nan,3\n", "line 2");
    fails_at("", "header");
}

TEST(SeriesCsv, MissingFileIsIoError) {
    EXPECT_EQ(kind_of([] { io::read_series_csv("/nonexistent/dir/x.csv"); }), ErrorKind::io);
}

TEST(ModelJson, RoundTrip) {
    CalibrationModel m;
    m.matrix << 1.001, 0.002, -0.003, 0.0, 0.998, 0.001, 0.0005, 0.0, 1.0002;
    m.offset = Vec3(201.25, -150.5, 80.125);
    m.target_field = 45000.5;
    m.provenance = Provenance::geometric;
    const auto j = io::to_json(m, "2026-01-01T00:00:00Z");
    for (const char* key : {"matrix", "offset", "target_field", "provenance", "created_at"})
        EXPECT_TRUE(j.contains(key)) << key;
    const auto back = io::model_from_json(io::json::parse(j.dump()));
    EXPECT_EQ(back.matrix, m.matrix);
    EXPECT_EQ(back.offset, m.offset);
    EXPECT_EQ(back.target_field, m.target_field);
    EXPECT_EQ(back.provenance, m.provenance);
}

TEST(ModelJson, Malformed) {
    auto j = io::to_json(CalibrationModel{}, "x");
    j["matrix"] = {1, 2, 3};
    EXPECT_EQ(kind_of([&] { io::model_from_json(j); }), ErrorKind::parse);
    j = io::to_json(CalibrationModel{}, "x");
    j.erase("offset");
    EXPECT_EQ(kind_of([&] { io::model_from_json(j); }), ErrorKind::parse);
    const auto path = scratch("broken.json");
    std::ofstream(path) << "{ not json";
    EXPECT_EQ(kind_of([&] { io::read_json(path.string()); }), ErrorKind::parse);
}

TEST(NetJson, RoundTrip) {
    LinearNet net = init_net(5);
    net.b1 = Vec3(0.1, 0.2, 0.3);
    const auto [back, field] = io::net_from_json(io::json::parse(io::to_json(net, 45000.0).dump()));
    EXPECT_EQ(back.w1, net.w1);
    EXPECT_EQ(back.w2, net.w2);
    EXPECT_EQ(back.b1, net.b1);
    EXPECT_EQ(back.seed, 5u);
    EXPECT_EQ(field, 45000.0);
}

TEST(TruthJson, RoundTrip) {
    const auto truth = DistortionTruth::typical(0.3);
    const auto plan = SamplingPlan::cap(0.4, 1234, 9);
    const auto [t, p] = io::truth_from_json(io::json::parse(io::to_json(truth, plan).dump()));
    EXPECT_EQ(t.soft_iron, truth.soft_iron);
    EXPECT_EQ(t.hard_iron, truth.hard_iron);
    EXPECT_EQ(t.noise_sigma, truth.noise_sigma);
    ASSERT_TRUE(t.angles.has_value());
    EXPECT_EQ(*t.angles, *truth.angles);
    EXPECT_EQ(p.mode, SamplingMode::uniform_cap);
    EXPECT_EQ(p.fraction, 0.4);
    EXPECT_EQ(p.n_samples, 1234u);
    EXPECT_EQ(p.seed, 9u);
    EXPECT_EQ(generate(t, p).first[100], generate(truth, plan).first[100]);
}

TEST(CoverageJson, TruncatesBaldCells) {
    const auto rep = coverage(make_series({{0, 0, 1}}, 1.0));
    const auto j = io::to_json(rep, 10);
    EXPECT_EQ(j["bald_cells"].size(), 10u);
    EXPECT_TRUE(j["bald_cells_truncated"].get<bool>());
    EXPECT_EQ(j["bald_cell_count"].get<std::size_t>(), 500u * 400u - 1);
}

TEST(SweepCsv, Layout) {
    SweepRow r;
    r.coverage = 0.5;
    r.sigma = 0.1;
    r.method = Method::nn;
    r.ptp = 1.25;
    r.seeds = 5;
    std::stringstream ss;
    io::write_sweep_csv(ss, {r});
    std::string header, row;
    std::getline(ss, header);
    std::getline(ss, row);
    EXPECT_EQ(header, "coverage,sigma,method,ptp,variance,ptp_noisy,variance_noisy,seeds,failures");
    EXPECT_EQ(row, "0.5,0.1,nn,1.25,0,0,0,5,0");
}
