#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "polarsplat/core.hpp"

namespace polarsplat {

/// BEV grid in the world frame. Cell (ix, iy) covers
/// [origin.x + ix c, origin.x + (ix + 1) c) x [origin.y + iy c, origin.y + (iy + 1) c).
/// Matrices are indexed (iy, ix).
struct OccupancyGrid {
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    double cell_size = 0.25;
    Eigen::MatrixXd mean_power;
    Eigen::MatrixXi binary;
    Eigen::MatrixXi counts;
    double p_th = 0.15;

    std::size_t width() const { return static_cast<std::size_t>(mean_power.cols()); }
    std::size_t height() const { return static_cast<std::size_t>(mean_power.rows()); }
    bool empty() const { return mean_power.size() == 0; }

    /// False when (x, y) lies outside the grid.
    bool cell_of(const Eigen::Vector2d& p, long& ix, long& iy) const;
    Eigen::Vector2d cell_center(long ix, long iy) const;
    std::size_t occupied() const;
    void validate() const;
};

struct OccupancyOptions {
    double p_th = 0.15;
    double cell_size = 0.25;
    /// Explicit world bounds [min, max] of the grid. Defaults to every pose
    /// +- max_range.
    std::optional<Eigen::AlignedBox2d> bounds;
};

/// Mean-pools every valid polar sample of the frames into the BEV cell holding
/// its sample center; cells with mean > p_th are occupied.
OccupancyGrid build_occupancy(const std::vector<RadarFrame>& frames, const OccupancyOptions& options = {});

/// Indices of a W-frame window centered on `center`, shifted to stay inside [0, total).
std::vector<std::size_t> window_indices(std::size_t center, std::size_t total, std::size_t window);

/// Nearest-cell lookup of the binary grid at every polar sample center.
Image grid_to_polar(const OccupancyGrid& grid, const Pose& pose, const RadarConfig& cfg);

}  // namespace polarsplat
