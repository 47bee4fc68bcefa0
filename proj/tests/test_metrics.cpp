#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polarsplat/metrics.hpp"

using namespace polarsplat;

namespace {

PointSet2D random_set(std::mt19937_64& rng, std::size_t n, double extent) {
    std::uniform_real_distribution<double> u(-extent, extent);
    PointSet2D s(n);
    for (auto& p : s) p = {u(rng), u(rng)};
    return s;
}

MatchScores brute_scores(const PointSet2D& p, const PointSet2D& q, double tau) {
    std::size_t mp = 0, mq = 0;
    for (const auto& x : p) mp += std::sqrt(brute_force_squared_distance(q, x)) < tau ? 1 : 0;
    for (const auto& x : q) mq += std::sqrt(brute_force_squared_distance(p, x)) < tau ? 1 : 0;
    return {static_cast<double>(mp + mq) / static_cast<double>(p.size() + q.size()),
            static_cast<double>(mp) / static_cast<double>(p.size()), static_cast<double>(mq) / static_cast<double>(q.size())};
}

}  // namespace

TEST(Psnr, IdenticalIsInfinite) {
    const Image a = Image::Constant(4, 5, 0.3);
    EXPECT_EQ(psnr(a, a), kPsnrIdentical);
}

TEST(Psnr, KnownMse) {
    const Image a = Image::Zero(4, 5);
    EXPECT_DOUBLE_EQ(psnr(a, Image::Constant(4, 5, 0.1)), 20.0);
    EXPECT_DOUBLE_EQ(psnr(a, Image::Constant(4, 5, 1.0)), 0.0);
}

TEST(Psnr, IgnoresMaskedColumns) {
    Image a = Image::Zero(3, 6), b = Image::Zero(3, 6);
    b.col(0).setConstant(1.0);
    b.rightCols(4).setConstant(0.1);
    EXPECT_DOUBLE_EQ(psnr(a, b, 2), 20.0);
}

TEST(Psnr, DimensionMismatchThrows) { EXPECT_THROW(psnr(Image::Zero(2, 2), Image::Zero(2, 3)), DimensionMismatch); }

TEST(Chamfer, Examples) {
    const PointSet2D p{{0, 0}}, q{{1, 0}};
    EXPECT_DOUBLE_EQ(chamfer(p, q), 2.0);
    EXPECT_DOUBLE_EQ(chamfer(q, q), 0.0);
    EXPECT_THROW(chamfer({}, q), EmptySet);
}

TEST(Chamfer, RigidInvariantAndSymmetric) {
    std::mt19937_64 rng(1);
    const PointSet2D p = random_set(rng, 50, 5), q = random_set(rng, 70, 5);
    const Eigen::Rotation2Dd rot(0.7);
    const Eigen::Vector2d t(3.0, -2.0);
    PointSet2D pt, qt;
    for (const auto& x : p) pt.push_back(rot * x + t);
    for (const auto& x : q) qt.push_back(rot * x + t);
    EXPECT_NEAR(chamfer(pt, qt), chamfer(p, q), 1e-9);
    EXPECT_DOUBLE_EQ(chamfer(p, q), chamfer(q, p));
}

TEST(RelativeChamfer, Examples) {
    const PointSet2D p{{0, 0}}, q{{0, 0}, {2, 0}};
    EXPECT_DOUBLE_EQ(relative_chamfer(p, q), 0.5);
    EXPECT_DOUBLE_EQ(relative_chamfer(q, q), 0.0);
    EXPECT_THROW(relative_chamfer(p, PointSet2D{{1, 1}, {1, 1}}), DegenerateGroundTruth);
}

TEST(RelativeChamfer, ScaleInvariant) {
    std::mt19937_64 rng(2);
    const PointSet2D p = random_set(rng, 30, 3), q = random_set(rng, 40, 3);
    PointSet2D ps, qs;
    for (const auto& x : p) ps.push_back(2.5 * x);
    for (const auto& x : q) qs.push_back(2.5 * x);
    EXPECT_NEAR(relative_chamfer(ps, qs), relative_chamfer(p, q), 1e-12);
}

TEST(Match, Examples) {
    const PointSet2D p{{0, 0}}, q{{0, 0}, {10, 0}};
    const MatchScores m = accuracy_precision_recall(p, q, 0.5);
    EXPECT_DOUBLE_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_DOUBLE_EQ(m.accuracy, 2.0 / 3.0);
    const MatchScores same = accuracy_precision_recall(q, q, 0.5);
    EXPECT_DOUBLE_EQ(same.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(same.precision, 1.0);
    EXPECT_DOUBLE_EQ(same.recall, 1.0);
    const MatchScores none = accuracy_precision_recall(PointSet2D{{0, 0}}, PointSet2D{{1e-3, 0}}, 1e-6);
    EXPECT_EQ(none.accuracy, 0.0);
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_EQ(none.recall, 0.0);
    EXPECT_THROW(accuracy_precision_recall({}, q), EmptySet);
    EXPECT_THROW(accuracy_precision_recall(p, q, 0.0), InvalidArgument);
}

TEST(Match, PrecisionIsSwappedRecallAgainstBruteForce) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> size(1, 300);
    for (int trial = 0; trial < 100; ++trial) {
        const PointSet2D p = random_set(rng, size(rng), 10.0), q = random_set(rng, size(rng), 10.0);
        const MatchScores pq = accuracy_precision_recall(p, q, 0.5);
        const MatchScores qp = accuracy_precision_recall(q, p, 0.5);
        const MatchScores oracle = brute_scores(p, q, 0.5);
        EXPECT_EQ(pq.precision, qp.recall);
        EXPECT_EQ(pq.recall, qp.precision);
        EXPECT_EQ(pq.accuracy, qp.accuracy);
        EXPECT_EQ(pq.precision, oracle.precision);
        EXPECT_EQ(pq.recall, oracle.recall);
        EXPECT_EQ(pq.accuracy, oracle.accuracy);
    }
}

TEST(NearestNeighbor, MatchesBruteForceExactly) {
    std::mt19937_64 rng(4);
    for (double cell : {0.05, 0.5, 5.0}) {
        const PointSet2D pts = random_set(rng, 1000, 20.0);
        const NearestNeighbor nn(pts, cell);
        for (const auto& q : random_set(rng, 500, 30.0)) {
            EXPECT_EQ(nn.squared_distance(q), brute_force_squared_distance(pts, q));
        }
    }
}

TEST(Rmse, Examples) {
    const PointSet2D p{{0, 0}}, q{{1, 0}};
    EXPECT_DOUBLE_EQ(geometry_rmse(p, q), 1.0);
    EXPECT_DOUBLE_EQ(geometry_rmse(q, q), 0.0);
    EXPECT_THROW(geometry_rmse(p, {}), EmptySet);
}

TEST(Rmse, MonotoneInDisplacement) {
    const PointSet2D q{{0, 0}, {1, 0}, {2, 0}};
    double prev = 0.0;
    for (double y = 0.0; y <= 3.0; y += 0.25) {
        const double r = geometry_rmse(PointSet2D{{0, 0}, {1, y}}, q);
        EXPECT_GE(r, prev);
        prev = r;
    }
}

TEST(OccupancyPoints, CellCenters) {
    OccupancyGrid g;
    g.mean_power = Eigen::MatrixXd::Zero(3, 4);
    g.binary = Eigen::MatrixXi::Zero(3, 4);
    g.counts = Eigen::MatrixXi::Zero(3, 4);
    EXPECT_TRUE(occupancy_to_points(g).empty());
    g.mean_power(0, 0) = 1.0;
    g.binary(0, 0) = 1;
    const PointSet2D pts = occupancy_to_points(g);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_DOUBLE_EQ(pts[0].x(), 0.125);
    EXPECT_DOUBLE_EQ(pts[0].y(), 0.125);
    g.mean_power(2, 3) = g.mean_power(1, 1) = 1.0;
    g.binary(2, 3) = g.binary(1, 1) = 1;
    EXPECT_EQ(occupancy_to_points(g).size(), g.occupied());
}
