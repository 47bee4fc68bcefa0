#pragma once

#include <cstddef>
#include <limits>
#include <unordered_map>
#include <vector>

#include "polarsplat/core.hpp"
#include "polarsplat/occupancy.hpp"

namespace polarsplat {

using PointSet2D = std::vector<Eigen::Vector2d>;

/// 10 log10(1 / MSE) over columns >= first_col; +inf when the images agree.
double psnr(const Image& a, const Image& b, std::size_t first_col = 0);
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Exact nearest-neighbour queries through a uniform spatial hash. Rings of
/// cells are scanned outward until no unvisited cell can hold a closer point.
class NearestNeighbor {
public:
    NearestNeighbor(const PointSet2D& points, double cell_size);

    double squared_distance(const Eigen::Vector2d& q) const;
    double distance(const Eigen::Vector2d& q) const;

private:
    static std::uint64_t key(long ix, long iy);

    PointSet2D points_;
    double cell_;
    long min_x_ = 0, max_x_ = 0, min_y_ = 0, max_y_ = 0;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// Brute-force reference used by the tests and for tiny sets.
double brute_force_squared_distance(const PointSet2D& points, const Eigen::Vector2d& q);

/// Mean squared NN distance P -> Q plus Q -> P.
double chamfer(const PointSet2D& p, const PointSet2D& q);
/// chamfer / max squared pairwise distance within Q.
double relative_chamfer(const PointSet2D& p, const PointSet2D& q);

struct MatchScores {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

MatchScores accuracy_precision_recall(const PointSet2D& p, const PointSet2D& q, double tau = 0.5);

/// sqrt(chamfer / 2): symmetric nearest-neighbour RMSE.
double geometry_rmse(const PointSet2D& p, const PointSet2D& q);

/// Centers of the occupied cells.
PointSet2D occupancy_to_points(const OccupancyGrid& grid);

}  // namespace polarsplat
