#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polarsplat/core.hpp"

using namespace polarsplat;

TEST(Spherical, AxisAligned) {
    const auto s = cart_to_spherical({1, 0, 0});
    EXPECT_DOUBLE_EQ(s.r, 1.0);
    EXPECT_DOUBLE_EQ(s.theta, 0.0);
    EXPECT_DOUBLE_EQ(s.phi, 0.0);
}

TEST(Spherical, Pole) {
    const auto s = cart_to_spherical({0, 0, 1});
    EXPECT_DOUBLE_EQ(s.r, 1.0);
    EXPECT_DOUBLE_EQ(s.phi, kPi / 2);
}

TEST(Spherical, Diagonal) {
    const auto s = cart_to_spherical({1, 1, 1});
    EXPECT_NEAR(s.r, std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(s.theta, kPi / 4, 1e-15);
    EXPECT_NEAR(s.phi, std::asin(1.0 / std::sqrt(3.0)), 1e-15);
}

TEST(Spherical, OriginConvention) {
    const auto s = cart_to_spherical({0, 0, 0});
    EXPECT_EQ(s.r, 0.0);
    EXPECT_EQ(s.theta, 0.0);
    EXPECT_EQ(s.phi, 0.0);
}

TEST(Spherical, RoundTrip) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ur(1e-3, 100.0), ut(-kPi, kPi), up(-kPi / 2 + 1e-3, kPi / 2 - 1e-3);
    for (int i = 0; i < 1000; ++i) {
        const SphericalPoint s{ur(rng), ut(rng), up(rng)};
        const auto back = cart_to_spherical(spherical_to_cart(s));
        EXPECT_NEAR(back.r, s.r, 1e-9 * std::max(1.0, s.r));
        EXPECT_NEAR(wrap_angle(back.theta - s.theta), 0.0, 1e-9);
        EXPECT_NEAR(back.phi, s.phi, 1e-9);
    }
}

TEST(Jacobian, IdentityOnXAxis) {
    const Eigen::Matrix3d J = spherical_jacobian({1, 0, 0});
    EXPECT_TRUE(J.isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST(Jacobian, PoleThrows) {
    EXPECT_THROW(spherical_jacobian({0, 0, 1}), PoleSingularity);
    EXPECT_THROW(spherical_jacobian({0, 0, 0}), PoleSingularity);
}

TEST(Jacobian, MatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    int checked = 0;
    while (checked < 1000) {
        const Eigen::Vector3d p(u(rng), u(rng), 0.5 * u(rng));
        if (p.head<2>().norm() < 0.5 || std::abs(std::atan2(p.y(), p.x())) > 3.0) {
            continue;  // keep the FD stencil off the pole and the atan2 branch cut
        }
        const Eigen::Matrix3d J = spherical_jacobian(p);
        const double h = 1e-6 * std::max(1.0, p.norm());
        Eigen::Matrix3d fd;
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d a = p, b = p;
            a[c] += h;
            b[c] -= h;
            const auto sa = cart_to_spherical(a);
            const auto sb = cart_to_spherical(b);
            fd(0, c) = (sa.r - sb.r) / (2 * h);
            fd(1, c) = (sa.theta - sb.theta) / (2 * h);
            fd(2, c) = (sa.phi - sb.phi) / (2 * h);
        }
        const double scale = J.cwiseAbs().maxCoeff();
        EXPECT_LT((J - fd).cwiseAbs().maxCoeff() / scale, 1e-6) << p.transpose();
        ++checked;
    }
}

TEST(Range, BinCenters) {
    RadarConfig cfg;
    EXPECT_NEAR(bin_to_range(0, cfg), 0.0298, 1e-12);
    EXPECT_NEAR(bin_to_range(838, cfg), 49.975, 1e-3);
    EXPECT_THROW(bin_to_range(839, cfg), OutOfRange);
}

TEST(Config, DefaultsValid) {
    RadarConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.first_valid_bin(), 42u);
    cfg.n_azimuth = 399;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Pose, InverseAndAssociativity) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    auto random_pose = [&] {
        Pose p;
        p.translation = {u(rng), u(rng), u(rng)};
        p.rotation = Eigen::Quaterniond(Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng)).normalized());
        return p;
    };
    for (int i = 0; i < 100; ++i) {
        const Pose a = random_pose(), b = random_pose(), c = random_pose();
        const Eigen::Vector3d x(u(rng), u(rng), u(rng));
        EXPECT_LT((a.inverse().to_world(a.to_world(x)) - x).norm(), 1e-9);
        EXPECT_LT((a.to_sensor(a.to_world(x)) - x).norm(), 1e-9);
        const Pose l = compose(compose(a, b), c);
        const Pose r = compose(a, compose(b, c));
        EXPECT_LT((l.to_world(x) - r.to_world(x)).norm(), 1e-9);
    }
}

TEST(Pose, RejectsNonUnitQuaternion) {
    Pose p;
    p.rotation = Eigen::Quaterniond(1.0, 0.0, 0.0, 1e-4);
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Frame, ValidatesRangeAndShape) {
    RadarConfig cfg;
    auto f = RadarFrame::zeros(cfg);
    EXPECT_NO_THROW(f.validate());
    f.power(0, 0) = 1.5;
    EXPECT_THROW(f.validate(), InvalidArgument);
    f.power.resize(10, 10);
    EXPECT_THROW(f.validate(), DimensionMismatch);
}

TEST(Azimuth, BeamRoundTrip) {
    RadarConfig cfg;
    for (std::size_t h = 0; h < cfg.n_azimuth; ++h) {
        EXPECT_EQ(azimuth_to_beam(beam_azimuth(h, cfg), cfg), h);
    }
    EXPECT_EQ(azimuth_to_beam(-deg2rad(0.9), cfg), 399u);
}
