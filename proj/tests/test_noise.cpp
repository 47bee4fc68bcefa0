#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polarsplat/noise.hpp"
#include "polarsplat/spectral.hpp"

using namespace polarsplat;

namespace {

RadarFrame frame_with_pulses(const RadarConfig& cfg) {
    auto f = RadarFrame::zeros(cfg);
    for (Eigen::Index h = 0; h < f.power.rows(); ++h) {
        const auto c = 100 + 3 * h % 500;
        for (Eigen::Index n = c - 6; n <= c + 6; ++n) {
            f.power(h, n) = 0.8 * std::exp(-0.5 * std::pow(static_cast<double>(n - c) / 2.9, 2));
        }
    }
    return f;
}

}  // namespace

TEST(Detect, CleanPulsesGiveEmptyReport) {
    const RadarConfig cfg;
    EXPECT_TRUE(detect_noise(frame_with_pulses(cfg)).empty());
}

TEST(Detect, OffsetBeamsAreSaturated) {
    const RadarConfig cfg;
    auto f = frame_with_pulses(cfg);
    for (Eigen::Index h = 10; h <= 20; ++h) {
        f.power.row(h) = (f.power.row(h).array() + 0.3).min(1.0);
    }
    const auto r = detect_noise(f);
    for (std::size_t h = 10; h <= 20; ++h) EXPECT_TRUE(r.saturated.count(h)) << h;
    EXPECT_EQ(r.saturated.size(), 11u);
}

TEST(Detect, PeriodicTailIsMultipath) {
    const RadarConfig cfg;
    auto f = frame_with_pulses(cfg);
    const Eigen::Index h = 42;
    const auto src = 100 + 3 * h % 500;
    for (Eigen::Index n = src; n < f.power.cols(); ++n) {
        const double d = static_cast<double>(n - src) * cfg.range_resolution;
        f.power(h, n) = std::min(1.0, f.power(h, n) + 0.4 * 0.8 * std::max(std::cos(kTwoPi * d / 10.0), 0.0) + 0.3);
    }
    f.power.row(h).head(src) = (f.power.row(h).head(src).array() + 0.3).min(1.0);
    const auto r = detect_noise(f);
    ASSERT_EQ(r.multipath.size(), 1u);
    EXPECT_EQ(r.multipath[0].azimuth, 42u);
    EXPECT_EQ(r.multipath[0].k_m, 5u);
    EXPECT_GE(r.multipath[0].magnitude / peak_normalization(cfg.n_range), r.thresholds.peak_magnitude);
}

TEST(Detect, RejectsBadThresholds) {
    NoiseThresholds t;
    t.peak_magnitude = 0.0;
    EXPECT_THROW(detect_noise(RadarFrame::zeros(RadarConfig{}), t), InvalidArgument);
}

TEST(DecayRegion, IsolatedPulseAbsorbsZeroBackground) {
    // the walk never meets a rise, so the zero plateau is absorbed on both sides
    std::vector<double> x(200, 0.0);
    for (int n = 40; n <= 60; ++n) x[static_cast<std::size_t>(n)] = 1.0 - std::abs(n - 50) / 10.0;
    const auto d = decay_region(x, 5.0);
    EXPECT_EQ(d.start, 0u);
    EXPECT_EQ(d.end, 199u);
}

TEST(DecayRegion, StopsAtValleysBetweenPulses) {
    std::vector<double> x(200, 0.0);
    auto tri = [&](int c, double h) {
        for (int n = c - 10; n <= c + 10; ++n) x[static_cast<std::size_t>(n)] += h * (1.0 - std::abs(n - c) / 10.0);
    };
    tri(20, 0.5);
    tri(100, 1.0);
    tri(180, 0.5);
    const auto d = decay_region(x, 5.0);
    // smoothed valleys sit midway between the pulses, pulled toward the weaker side
    const auto s = gaussian_smooth(x, 5.0);
    const auto left = static_cast<std::size_t>(std::min_element(s.begin() + 20, s.begin() + 100) - s.begin());
    const auto right = static_cast<std::size_t>(std::min_element(s.begin() + 100, s.begin() + 180) - s.begin());
    EXPECT_LE(d.start, left);
    EXPECT_GE(d.end, right);
    EXPECT_GT(d.start, 30u);
    EXPECT_LT(d.end, 170u);
    EXPECT_LE(d.start, 90u);
    EXPECT_GE(d.end, 110u);
}

TEST(DecayRegion, MonotoneAndConstant) {
    std::vector<double> dec(100);
    for (int n = 0; n < 100; ++n) dec[static_cast<std::size_t>(n)] = 1.0 - n / 100.0;
    auto d = decay_region(dec, 5.0);
    EXPECT_EQ(d.start, 0u);
    EXPECT_EQ(d.end, 99u);
    d = decay_region(std::vector<double>(100, 0.4), 5.0);
    EXPECT_EQ(d.start, 0u);
    EXPECT_EQ(d.end, 99u);
}

TEST(DecayRegion, ContainsSmoothedArgmax) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(300);
        for (auto& v : x) v = u(rng);
        const auto s = gaussian_smooth(x, 5.0);
        const auto arg = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
        EXPECT_TRUE(decay_region(x, 5.0).contains(arg));
    }
}

TEST(Denoise, EmptyReportIsIdentity) {
    const auto f = frame_with_pulses(RadarConfig{});
    const auto out = denoise_frame(f, NoiseReport{});
    EXPECT_TRUE(out.power == f.power);
}

TEST(Denoise, OnlyNoisyBeamsChangeAndNeverIncrease) {
    const RadarConfig cfg;
    auto f = frame_with_pulses(cfg);
    f.power.row(5) = (f.power.row(5).array() + 0.3).min(1.0);
    const auto r = detect_noise(f);
    const auto out = denoise_frame(f, r);
    EXPECT_TRUE((out.power.array() <= f.power.array()).all());
    for (Eigen::Index h = 0; h < f.power.rows(); ++h) {
        if (!r.noisy_beams().count(static_cast<std::size_t>(h))) {
            EXPECT_TRUE(out.power.row(h) == f.power.row(h));
        }
    }
    EXPECT_TRUE(denoise_frame(out, r).power == out.power);
}

TEST(Denoise, ReportOutsideFrameThrows) {
    NoiseReport r;
    r.saturated.insert(400);
    EXPECT_THROW(denoise_frame(RadarFrame::zeros(RadarConfig{}), r), DimensionMismatch);
}
