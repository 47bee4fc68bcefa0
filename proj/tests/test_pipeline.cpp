#include <gtest/gtest.h>

#include "polarsplat/pipeline.hpp"

using namespace polarsplat;

namespace {

RunConfig bright_run() {
    RunConfig c;
    c.radar.transmit_scale = 3.75e5;
    return c;
}

std::vector<RadarFrame> noisy_sequence(const RunConfig& c, std::size_t n, std::vector<RadarFrame>* clean = nullptr) {
    std::vector<RadarFrame> out;
    std::uint64_t seed = 11;
    for (const auto& pose : line_trajectory({-3.0, 0.0}, {3.0, 0.0}, n)) {
        RadarFrame f = simulate_frame(three_wall_scene(), pose, c.radar);
        if (clean) clean->push_back(f);
        out.push_back(inject_noise(f, c.synth.noise, seed++));
    }
    return out;
}

}  // namespace

TEST(Holdout, IndicesPartitionTheSequence) {
    EXPECT_EQ(holdout_indices(12, 5), (std::vector<std::size_t>{2, 7}));
    EXPECT_EQ(training_indices(6, 5), (std::vector<std::size_t>{0, 1, 3, 4, 5}));
    EXPECT_TRUE(holdout_indices(10, 0).empty());
    EXPECT_EQ(training_indices(3, 0).size(), 3u);
}

TEST(DenoiseSequence, ReportsAndSourceMap) {
    const RunConfig c = bright_run();
    const std::vector<RadarFrame> raw = noisy_sequence(c, 3);
    const DenoisedSequence seq = denoise_sequence(raw, c);
    ASSERT_EQ(seq.frames.size(), 3u);
    ASSERT_EQ(seq.reports.size(), 3u);
    for (const auto& r : seq.reports) EXPECT_FALSE(r.multipath.empty());
    EXPECT_FALSE(seq.source_map.sources.empty());
    const DenoisedSequence again = denoise_sequence(raw, c);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE((again.frames[i].power.array() == seq.frames[i].power.array()).all());
}

TEST(MakeTargets, ComposesMultipathOnlyOnFlaggedFrames) {
    RunConfig c = bright_run();
    std::vector<RadarFrame> clean;
    std::vector<RadarFrame> raw = noisy_sequence(c, 3, &clean);
    raw[1] = clean[1];
    const DenoisedSequence seq = denoise_sequence(raw, c);
    ASSERT_TRUE(seq.reports[1].multipath.empty());
    const std::vector<FrameTarget> t = make_targets(seq, {0, 1, 2}, c);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_TRUE(t[0].multipath.has_value());
    EXPECT_FALSE(t[1].multipath.has_value());
    EXPECT_TRUE((t[1].gt.array() == seq.frames[1].power.array()).all());
    EXPECT_TRUE((t[0].gt.array() >= seq.frames[0].power.array()).all());

    c.fit.train.compose_multipath = false;
    for (const auto& x : make_targets(seq, {0, 2}, c)) EXPECT_FALSE(x.multipath.has_value());
}

TEST(OccupancyTargets, UseOnlySelectedFrames) {
    const RunConfig c = bright_run();
    std::vector<RadarFrame> frames;
    for (const auto& pose : line_trajectory({-1.0, 0.0}, {1.0, 0.0}, 3)) frames.push_back(simulate_frame(three_wall_scene(), pose, c.radar));
    std::vector<RadarFrame> poisoned = frames;
    poisoned[1].power.setOnes();
    const std::vector<Image> a = occupancy_targets(frames, {0, 2}, c.occupancy);
    const std::vector<Image> b = occupancy_targets(poisoned, {0, 2}, c.occupancy);
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_TRUE((a[i].array() == b[i].array()).all());
    EXPECT_GT(a[0].maxCoeff(), 0.5);
}

TEST(GroundTruthInRange, CropsToReachablePoints) {
    const SceneSpec s = three_wall_scene();
    const std::vector<Pose> poses{Pose{}};
    const PointSet2D all = scene_ground_truth(s, 0.1);
    EXPECT_EQ(ground_truth_in_range(s, poses, 100.0, 0.1).size(), all.size());
    const PointSet2D near = ground_truth_in_range(s, poses, 8.5, 0.1);
    EXPECT_LT(near.size(), all.size());
    for (const auto& q : near) EXPECT_LT(q.norm(), 8.5);
}
