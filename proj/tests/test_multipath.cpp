#include <gtest/gtest.h>

#include <cmath>

#include "polarsplat/multipath.hpp"
#include "polarsplat/spectral.hpp"
#include "polarsplat/synth.hpp"

using namespace polarsplat;

namespace {

constexpr double kSourcePower = 0.8;

RadarFrame pulse_frame(const RadarConfig& cfg, std::size_t beam, std::size_t bin) {
    RadarFrame f = RadarFrame::zeros(cfg);
    for (int d = -6; d <= 6; ++d) {
        f.power(static_cast<Eigen::Index>(beam), static_cast<Eigen::Index>(bin) + d) = kSourcePower * std::exp(-0.5 * d * d / 8.4);
    }
    return f;
}

RadarFrame ghost_frame(const RadarConfig& cfg, const Pose& pose, std::size_t beam, std::size_t bin) {
    RadarFrame f = pulse_frame(cfg, beam, bin);
    f.pose = pose;
    f = inject_multipath(f, beam, bin, 10.0, 0.4, 0.002);
    return inject_saturation(f, {beam}, 0.3);
}

}  // namespace

TEST(SourceDistance, Examples) {
    const RadarConfig cfg;
    EXPECT_NEAR(source_distance(5, cfg), 10.0, 0.01);
    EXPECT_DOUBLE_EQ(source_distance(1, cfg), 839 * 0.0596);
    EXPECT_THROW(source_distance(0, cfg), ZeroFrequency);
}

TEST(SourceDistance, RoundTripWithinOneBin) {
    const RadarConfig cfg;
    const double n = static_cast<double>(cfg.n_range);
    for (double d = 2.0 * cfg.range_resolution * n / (n - 1.0); d <= n * cfg.range_resolution; d *= 1.07) {
        const auto k = static_cast<std::size_t>(std::lround(n * cfg.range_resolution / d));
        const double back = source_distance(k, cfg);
        EXPECT_LE(std::abs(1.0 / back - 1.0 / d), 0.5 / (n * cfg.range_resolution) + 1e-12) << d;
    }
}

TEST(Reconstruct, Examples) {
    for (double v : reconstruct_component(3, 0.0, 0.4, 16)) EXPECT_EQ(v, 0.0);
    const auto x = reconstruct_component(2, 4.0, 0.0, 8);
    EXPECT_NEAR(x[0], 0.5, 1e-15);
    EXPECT_NEAR(x[2], -0.5, 1e-15);
    EXPECT_THROW(reconstruct_component(0, 1.0, 0.0, 8), InvalidArgument);
}

TEST(Reconstruct, FftRoundTrip) {
    const auto x = reconstruct_component(7, 30.0, 0.6, 256);
    const BeamSpectrum s = range_fft(x);
    const SpectralPeak p = peak_component(s);
    EXPECT_EQ(p.k, 7u);
    EXPECT_NEAR(p.magnitude, 30.0 / 2.0, 1e-9);
    EXPECT_NEAR(p.phase, 0.6, 1e-9);
}

TEST(FitAttenuation, Identity) {
    const auto c = reconstruct_component(5, 40.0, 0.3, 839);
    const AttenuationFit f = fit_attenuation(c, c);
    EXPECT_NEAR(f.amplitude, 1.0, 1e-9);
    EXPECT_NEAR(f.gamma, 0.0, 1e-9);
}

TEST(FitAttenuation, NoiselessSignedCosine) {
    const auto c = reconstruct_component(5, 40.0, -1.1, 839);
    std::vector<double> x(c.size());
    for (std::size_t n = 0; n < c.size(); ++n) x[n] = 0.5 * std::exp(-0.01 * static_cast<double>(n)) * c[n];
    const AttenuationFit f = fit_attenuation(x, c);
    EXPECT_NEAR(f.amplitude, 0.5, 1e-6);
    EXPECT_NEAR(f.gamma, 0.01, 1e-6);
}

TEST(FitAttenuation, ZeroTarget) {
    const auto c = reconstruct_component(5, 40.0, 0.0, 839);
    const AttenuationFit f = fit_attenuation(std::vector<double>(839, 0.0), c);
    EXPECT_EQ(f.amplitude, 0.0);
    EXPECT_EQ(f.gamma, 0.0);
}

TEST(FitAttenuation, TooFewPeaksThrows) {
    const auto c = reconstruct_component(1, 4.0, 0.0, 64);
    EXPECT_THROW(fit_attenuation(c, c), DegenerateFit);
}

TEST(FitAttenuation, HalfRectifiedInjectionWithinTenPercent) {
    const RadarConfig cfg;
    const std::size_t beam = 7, src = 170;
    const RadarFrame g = ghost_frame(cfg, Pose{}, beam, src);
    const NoiseReport r = detect_noise(g);
    ASSERT_EQ(r.multipath.size(), 1u);
    EXPECT_EQ(r.multipath[0].k_m, 5u);
    const MultipathSourceMap map = build_source_map({g}, {r});
    ASSERT_EQ(map.sources.size(), 1u);
    const MultipathSource& s = map.sources[0];
    // A scales the reconstructed tone; the injected amplitude is relative to the source power
    const double injected_equivalent = s.amplitude * s.magnitude / static_cast<double>(s.n_bins) / kSourcePower;
    EXPECT_NEAR(injected_equivalent, 0.4, 0.04);
    EXPECT_NEAR(s.gamma, 0.002, 0.0002);
}

TEST(SourceMap, EmptyWithoutDetections) {
    const RadarConfig cfg;
    EXPECT_TRUE(build_source_map({pulse_frame(cfg, 3, 200)}, {NoiseReport{}}).sources.empty());
    EXPECT_THROW(build_source_map({pulse_frame(cfg, 3, 200)}, {}), DimensionMismatch);
}

TEST(SourceMap, SingleSourceOnBoresight) {
    const RadarConfig cfg;
    const auto src = static_cast<std::size_t>(std::floor(10.0 / cfg.range_resolution));
    const RadarFrame g = ghost_frame(cfg, Pose{}, 0, src);
    const MultipathSourceMap map = build_source_map({g}, {detect_noise(g)});
    ASSERT_EQ(map.sources.size(), 1u);
    const double src_center = bin_to_range(src, cfg);
    EXPECT_LE(std::abs(map.sources[0].position.x() - src_center), cfg.range_resolution + 1e-12);
    EXPECT_NEAR(map.sources[0].position.y(), 0.0, 1e-9);
    EXPECT_LE(std::abs(map.sources[0].r_view - src_center), cfg.range_resolution + 1e-12);
}

TEST(SourceMap, NearbyPosesMerge) {
    const RadarConfig cfg;
    const auto src = static_cast<std::size_t>(std::floor(10.0 / cfg.range_resolution));
    const RadarFrame a = ghost_frame(cfg, Pose{}, 0, src);
    const Pose moved = Pose::from_xy_yaw(0.2, 0.0, 0.0);
    const RadarFrame b = ghost_frame(cfg, moved, 0, src - static_cast<std::size_t>(std::lround(0.2 / cfg.range_resolution)));
    SourceMapStats st;
    const MultipathSourceMap map = build_source_map({a, b}, {detect_noise(a), detect_noise(b)}, {}, &st);
    ASSERT_EQ(map.sources.size(), 1u);
    EXPECT_EQ(map.sources[0].merged, 2u);
    EXPECT_EQ(st.merged, 1u);
}

TEST(RenderMultipath, EmptyMapGivesZero) {
    const RadarConfig cfg;
    EXPECT_EQ(render_multipath(MultipathSourceMap{}, Pose{}, cfg).cwiseAbs().maxCoeff(), 0.0);
}

TEST(RenderMultipath, CapturePoseReproducesGhost) {
    const RadarConfig cfg;
    const std::size_t beam = 7, src = 170;
    const RadarFrame clean = pulse_frame(cfg, beam, src);
    const RadarFrame g = ghost_frame(cfg, Pose{}, beam, src);
    const MultipathSourceMap map = build_source_map({g}, {detect_noise(g)});
    ASSERT_EQ(map.sources.size(), 1u);
    const Image m = render_multipath(map, Pose{}, cfg);
    EXPECT_EQ(m.cwiseAbs().rowwise().sum().maxCoeff(), m.row(static_cast<Eigen::Index>(beam)).cwiseAbs().sum());
    const Eigen::Index from = static_cast<Eigen::Index>(src) + 20;
    const auto len = static_cast<Eigen::Index>(cfg.n_range) - from;
    const Eigen::RowVectorXd ghost = (g.power.row(static_cast<Eigen::Index>(beam)).array() - 0.3 -
                                      clean.power.row(static_cast<Eigen::Index>(beam)).array())
                                         .matrix()
                                         .segment(from, len);
    const Eigen::RowVectorXd rendered = m.row(static_cast<Eigen::Index>(beam)).segment(from, len);
    const double rel = (rendered - ghost).norm() / ghost.norm();
    EXPECT_LT(rel, 0.5);
    EXPECT_NEAR(rendered.maxCoeff(), ghost.maxCoeff(), 0.1 * ghost.maxCoeff());
}

TEST(RenderMultipath, FarPoseGivesZero) {
    const RadarConfig cfg;
    const RadarFrame g = ghost_frame(cfg, Pose{}, 7, 170);
    const MultipathSourceMap map = build_source_map({g}, {detect_noise(g)});
    ASSERT_EQ(map.sources.size(), 1u);
    const Image m = render_multipath(map, Pose::from_xy_yaw(-1.0, 0.0, 0.0), cfg);
    EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
}

TEST(RenderMultipath, LinearInAmplitude) {
    const RadarConfig cfg;
    const RadarFrame g = ghost_frame(cfg, Pose{}, 7, 170);
    MultipathSourceMap map = build_source_map({g}, {detect_noise(g)});
    ASSERT_EQ(map.sources.size(), 1u);
    const Image once = render_multipath_raw(map, Pose{}, cfg);
    for (auto& s : map.sources) s.amplitude *= 2.0;
    const Image twice = render_multipath_raw(map, Pose{}, cfg);
    EXPECT_LT((twice - 2.0 * once).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GT(once.maxCoeff(), 0.0);
}
