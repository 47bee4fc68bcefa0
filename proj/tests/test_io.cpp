#include <gtest/gtest.h>

#include <fstream>

#include "polarsplat/config.hpp"
#include "polarsplat/io.hpp"

using namespace polarsplat;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / (std::string("polarsplat_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

RadarConfig small_config(std::size_t n_azimuth, std::size_t n_range) {
    RadarConfig cfg;
    cfg.n_azimuth = n_azimuth;
    cfg.azimuth_resolution = 360.0 / static_cast<double>(n_azimuth);
    cfg.n_range = n_range;
    cfg.max_range = static_cast<double>(n_range) * cfg.range_resolution;
    cfg.min_valid_range = 0.0;
    return cfg;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

Image ramp(Eigen::Index rows, Eigen::Index cols) {
    Image img(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) img(r, c) = static_cast<double>(r * cols + c) / static_cast<double>(rows * cols - 1);
    }
    return img;
}

}  // namespace

TEST(Png, SixteenBitRoundTripWithinQuantization) {
    TempDir d;
    const Image img = ramp(7, 13);
    write_png16(d.path() / "a.png", img);
    const Image back = read_png(d.path() / "a.png");
    ASSERT_EQ(back.rows(), 7);
    ASSERT_EQ(back.cols(), 13);
    EXPECT_LE((back - img).cwiseAbs().maxCoeff(), 0.5 / 65535.0 + 1e-12);
}

TEST(Png, EightBitRoundTripAndClamp) {
    TempDir d;
    Image img = ramp(4, 5);
    img(0, 0) = -1.0;
    img(3, 4) = 2.0;
    write_png8(d.path() / "a.png", img);
    const Image back = read_png(d.path() / "a.png");
    EXPECT_EQ(back(0, 0), 0.0);
    EXPECT_EQ(back(3, 4), 1.0);
    EXPECT_LE((back - img.cwiseMax(0.0).cwiseMin(1.0)).cwiseAbs().maxCoeff(), 0.5 / 255.0 + 1e-12);
}

TEST(Png, MissingFileThrows) { EXPECT_THROW(read_png("/nonexistent/x.png"), IoError); }

TEST(Frame, RoundTripKeepsPoseConfigAndPower) {
    TempDir d;
    const RadarConfig cfg = small_config(20, 64);
    RadarFrame f = RadarFrame::zeros(cfg, Pose::from_xy_yaw(1.5, -2.0, 0.4, 0.3), 2.25);
    f.power = ramp(20, 64);
    save_frame(d.path(), 3, f);
    EXPECT_TRUE(fs::exists(d.path() / "frame_0003.png"));
    EXPECT_TRUE(fs::exists(d.path() / "frame_0003.json"));
    const RadarFrame g = load_frame(d.path() / "frame_0003.png");
    EXPECT_EQ(g.config.n_range, 64u);
    EXPECT_EQ(g.timestamp, 2.25);
    EXPECT_LT((g.pose.translation - f.pose.translation).norm(), 1e-12);
    EXPECT_LE((g.power - f.power).cwiseAbs().maxCoeff(), 0.5 / 65535.0 + 1e-12);
    save_frame(d.path(), 1, f);
    const auto paths = list_frames(d.path());
    ASSERT_EQ(paths.size(), 2u);
    EXPECT_EQ(paths[0].filename(), "frame_0001.png");
}

TEST(Frame, PngDisagreeingWithSidecarThrows) {
    TempDir d;
    const RadarConfig cfg = small_config(20, 64);
    save_frame(d.path(), 0, RadarFrame::zeros(cfg));
    write_png16(d.path() / "frame_0000.png", Image::Zero(20, 63));
    EXPECT_THROW(load_frame(d.path() / "frame_0000.png"), IoError);
    EXPECT_THROW(list_frames(d.path() / "missing"), IoError);
}

TEST(Json, ReportSourceMapCheckpointAndSceneRoundTrip) {
    NoiseReport r;
    r.saturated = {1, 5};
    r.multipath.push_back({5, 5, 12.5, -0.3});
    const NoiseReport r2 = noise_report_from_json(to_json(r));
    EXPECT_EQ(r2.saturated, r.saturated);
    ASSERT_EQ(r2.multipath.size(), 1u);
    EXPECT_EQ(r2.multipath[0].magnitude, 12.5);
    EXPECT_EQ(r2.thresholds.peak_magnitude, r.thresholds.peak_magnitude);

    MultipathSourceMap m;
    MultipathSource s;
    s.position = {10.0, 1.0, 0.0};
    s.amplitude = 0.4;
    s.gamma = 0.002;
    s.k_m = 5;
    s.magnitude = 20.0;
    s.n_bins = 839;
    s.r_view = 10.05;
    m.sources.push_back(s);
    const Json mj = to_json(m);
    EXPECT_TRUE(mj.is_array());
    const MultipathSourceMap m2 = source_map_from_json(mj);
    ASSERT_EQ(m2.sources.size(), 1u);
    EXPECT_EQ(m2.sources[0].position, s.position);
    EXPECT_EQ(m2.sources[0].k_m, 5u);

    GaussianScene g;
    g.gaussians.push_back(Gaussian::make({1.0, 2.0, 0.5}, 0.3, 0.2, 0.1, 0.05));
    g.gaussians[0].sh[1] = -0.01;
    g.log_transmit_scale = 3.0;
    const GaussianScene g2 = scene_from_json(to_json(g));
    EXPECT_EQ(g2.pack(), g.pack());
    EXPECT_EQ(g2.s_max, g.s_max);

    const SceneSpec spec = three_wall_scene();
    const SceneSpec spec2 = scene_spec_from_json(to_json(spec));
    ASSERT_EQ(spec2.walls.size(), 3u);
    EXPECT_EQ(spec2.walls[2].a, spec.walls[2].a);
    EXPECT_EQ(spec2.walls[2].z_max, spec.walls[2].z_max);
}

TEST(Json, CheckpointFileRejectsWrongFormat) {
    TempDir d;
    write_text(d.path() / "c.json", R"({"format": "other", "gaussians": []})");
    EXPECT_THROW(load_checkpoint(d.path() / "c.json"), ConfigError);
    GaussianScene g;
    g.gaussians.push_back(Gaussian::make({1.0, 0.0, 0.0}, 0.5, 0.1, 0.1, 0.1));
    save_checkpoint(d.path() / "ok.json", g);
    EXPECT_EQ(load_checkpoint(d.path() / "ok.json").pack(), g.pack());
}

TEST(Occupancy, FileRoundTripKeepsBinaryAndGeometry) {
    TempDir d;
    OccupancyGrid g;
    g.origin = {-3.0, 2.0};
    g.cell_size = 0.5;
    g.mean_power = Eigen::MatrixXd::Zero(4, 6);
    g.binary = Eigen::MatrixXi::Zero(4, 6);
    g.counts = Eigen::MatrixXi::Ones(4, 6);
    g.binary(1, 2) = g.binary(3, 5) = 1;
    g.mean_power(1, 2) = g.mean_power(3, 5) = 0.5;
    save_occupancy(d.path() / "occ.png", g);
    const OccupancyGrid h = load_occupancy(d.path() / "occ.png");
    EXPECT_EQ(h.origin, g.origin);
    EXPECT_EQ(h.cell_size, g.cell_size);
    EXPECT_TRUE((h.binary.array() == g.binary.array()).all());
    EXPECT_EQ(h.occupied(), 2u);
}

TEST(Cartesian, BoresightReturnLandsRightOfCenter) {
    const RadarConfig cfg = small_config(40, 100);
    Image polar = Image::Zero(40, 100);
    polar.row(0).segment(40, 20).setOnes();
    const Image cart = polar_to_cartesian(polar, cfg, 101);
    ASSERT_EQ(cart.rows(), 101);
    EXPECT_EQ(cart(50, 75), 1.0);
    EXPECT_EQ(cart(50, 25), 0.0);
    EXPECT_EQ(cart(25, 50), 0.0);
    EXPECT_EQ(cart(0, 0), 0.0);
}

TEST(RunConfig, DefaultFileMatchesBuiltInDefaults) {
    const RunConfig c = load_run_config(fs::path(POLARSPLAT_SOURCE_DIR) / "configs" / "default.json");
    EXPECT_EQ(to_json(c).dump(), to_json(RunConfig{}).dump());
}

TEST(RunConfig, ShippedConfigsLoad) {
    for (const auto& e : fs::directory_iterator(fs::path(POLARSPLAT_SOURCE_DIR) / "configs")) {
        EXPECT_NO_THROW(load_run_config(e.path())) << e.path();
    }
}

TEST(RunConfig, UnknownKeyIsNamed) {
    try {
        run_config_from_json(Json::parse(R"({"train": {"lr": {"bogus": 1}}})"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("train.lr.bogus"), std::string::npos) << e.what();
    }
    EXPECT_THROW(run_config_from_json(Json::parse(R"({"radar": {"n_range": -3}})")), ConfigError);
    EXPECT_THROW(run_config_from_json(Json::parse(R"({"occupancy": {"window": "ten"}})")), ConfigError);
}

TEST(RunConfig, CommentsAndOverrides) {
    TempDir d;
    write_text(d.path() / "c.json", "// header\n{\n  \"seed\": 9, /* inline */\n  \"occupancy\": {\"window\": 4}\n}\n");
    const RunConfig c = load_run_config(d.path() / "c.json");
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.occupancy.window, 4u);
    EXPECT_EQ(c.fit.train.seed, 9u);
    EXPECT_EQ(c.fit.init.seed, 9u);
    EXPECT_EQ(c.occupancy.options.p_th, 0.15);
    const RunConfig again = run_config_from_json(to_json(c));
    EXPECT_EQ(to_json(again).dump(), to_json(c).dump());
}
