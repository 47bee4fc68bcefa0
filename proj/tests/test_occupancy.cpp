#include <gtest/gtest.h>

#include "polarsplat/metrics.hpp"
#include "polarsplat/occupancy.hpp"
#include "polarsplat/synth.hpp"

using namespace polarsplat;

namespace {

RadarConfig bright_config() {
    RadarConfig cfg;
    cfg.transmit_scale = 3.75e5;
    return cfg;
}

SceneSpec wall_at_five() {
    SceneSpec s;
    s.walls.push_back({{5.0, -5.0}, {5.0, 5.0}, 4.0, -1.0, 1.5});
    return s;
}

std::vector<RadarFrame> wall_frames(std::size_t n) {
    const RadarConfig cfg = bright_config();
    std::vector<RadarFrame> out;
    for (const auto& p : line_trajectory({-1.0, 0.0}, {1.0, 0.0}, n)) out.push_back(simulate_frame(wall_at_five(), p, cfg));
    return out;
}

RadarFrame constant_frame(double v) {
    RadarFrame f = RadarFrame::zeros(RadarConfig{});
    f.power.setConstant(v);
    return f;
}

}  // namespace

TEST(BuildOccupancy, ZeroFramesGiveEmptyGrid) {
    const OccupancyGrid g = build_occupancy({RadarFrame::zeros(RadarConfig{}), RadarFrame::zeros(RadarConfig{})});
    EXPECT_FALSE(g.empty());
    EXPECT_EQ(g.occupied(), 0u);
    EXPECT_EQ(g.mean_power.maxCoeff(), 0.0);
    EXPECT_GT(g.counts.maxCoeff(), 0);
}

TEST(BuildOccupancy, EmptyWindowThrows) { EXPECT_THROW(build_occupancy({}), EmptyWindow); }

TEST(BuildOccupancy, WallIsTracedAccurately) {
    const std::vector<RadarFrame> frames = wall_frames(10);
    const OccupancyGrid g = build_occupancy(frames);
    ASSERT_GT(g.occupied(), 0u);
    const PointSet2D p = occupancy_to_points(g);
    const PointSet2D q = scene_ground_truth(wall_at_five(), 0.1);
    const MatchScores m = accuracy_precision_recall(p, q, 0.5);
    EXPECT_GE(m.accuracy, 0.95);
    for (const auto& x : p) EXPECT_NEAR(x.x(), 5.0, 0.5);
}

TEST(BuildOccupancy, ThresholdIsStrict) {
    EXPECT_EQ(build_occupancy({constant_frame(0.14)}).occupied(), 0u);
    EXPECT_EQ(build_occupancy({constant_frame(0.15)}).occupied(), 0u);
    const OccupancyGrid g = build_occupancy({constant_frame(0.16)});
    EXPECT_EQ(static_cast<Eigen::Index>(g.occupied()), (g.counts.array() > 0).count());
}

TEST(BuildOccupancy, BinaryIsThresholdedMean) {
    const OccupancyGrid g = build_occupancy(wall_frames(3));
    EXPECT_TRUE((g.binary.array() == (g.mean_power.array() > g.p_th).cast<int>()).all());
}

TEST(BuildOccupancy, ZeroFrameAddsNoCellsAndOrderDoesNotMatter) {
    std::vector<RadarFrame> frames = wall_frames(4);
    const OccupancyGrid base = build_occupancy(frames);
    RadarFrame zero = RadarFrame::zeros(frames[0].config, frames[1].pose);
    std::vector<RadarFrame> with_zero = frames;
    with_zero.push_back(zero);
    const OccupancyGrid g0 = build_occupancy(with_zero);
    ASSERT_EQ(g0.binary.rows(), base.binary.rows());
    EXPECT_TRUE((g0.binary.array() <= base.binary.array()).all());

    std::reverse(frames.begin(), frames.end());
    const OccupancyGrid rev = build_occupancy(frames);
    EXPECT_TRUE((rev.binary.array() == base.binary.array()).all());
    EXPECT_LT((rev.mean_power - base.mean_power).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WindowIndices, CenteredAndClamped) {
    EXPECT_EQ(window_indices(20, 40, 10), (std::vector<std::size_t>{15, 16, 17, 18, 19, 20, 21, 22, 23, 24}));
    EXPECT_EQ(window_indices(0, 40, 10).front(), 0u);
    EXPECT_EQ(window_indices(39, 40, 10).back(), 39u);
    EXPECT_EQ(window_indices(1, 3, 10).size(), 3u);
    EXPECT_THROW(window_indices(0, 5, 0), EmptyWindow);
    EXPECT_THROW(window_indices(5, 5, 2), OutOfRange);
}

TEST(GridToPolar, EmptyGridGivesZero) {
    const RadarConfig cfg;
    EXPECT_EQ(grid_to_polar(OccupancyGrid{}, Pose{}, cfg).maxCoeff(), 0.0);
    EXPECT_EQ(grid_to_polar(build_occupancy({RadarFrame::zeros(cfg)}), Pose{}, cfg).maxCoeff(), 0.0);
}

TEST(GridToPolar, RoundTripPlacesWallAtItsRange) {
    const std::vector<RadarFrame> frames = wall_frames(10);
    const OccupancyGrid g = build_occupancy(frames);
    const RadarConfig& cfg = frames[0].config;
    const Pose pose = Pose::from_xy_yaw(0.0, 0.0, 0.0);
    const Image polar = grid_to_polar(g, pose, cfg);
    Eigen::Index first = 0;
    ASSERT_TRUE((polar.row(0).array() > 0.5).any());
    (polar.row(0).array() > 0.5).cast<int>().maxCoeff(&first);
    EXPECT_NEAR(bin_to_range(static_cast<std::size_t>(first), cfg), 5.0, 0.5);
}

TEST(GridToPolar, TranslationShiftsBoresightRange) {
    const std::vector<RadarFrame> frames = wall_frames(10);
    const OccupancyGrid g = build_occupancy(frames);
    const RadarConfig& cfg = frames[0].config;
    auto first_hit = [&](const Pose& p) {
        const Image polar = grid_to_polar(g, p, cfg);
        Eigen::Index n = 0;
        (polar.row(0).array() > 0.5).cast<int>().maxCoeff(&n);
        return static_cast<double>(n);
    };
    const double shift = first_hit(Pose::from_xy_yaw(0.0, 0.0, 0.0)) - first_hit(Pose::from_xy_yaw(1.0, 0.0, 0.0));
    EXPECT_NEAR(shift, 1.0 / cfg.range_resolution, 1.0);
}
