#include "polarsplat/occupancy.hpp"

#include <algorithm>
#include <cmath>

namespace polarsplat {

bool OccupancyGrid::cell_of(const Eigen::Vector2d& p, long& ix, long& iy) const {
    ix = static_cast<long>(std::floor((p.x() - origin.x()) / cell_size));
    iy = static_cast<long>(std::floor((p.y() - origin.y()) / cell_size));
    return ix >= 0 && iy >= 0 && ix < static_cast<long>(width()) && iy < static_cast<long>(height());
}

Eigen::Vector2d OccupancyGrid::cell_center(long ix, long iy) const {
    return origin + cell_size * Eigen::Vector2d(static_cast<double>(ix) + 0.5, static_cast<double>(iy) + 0.5);
}

std::size_t OccupancyGrid::occupied() const {
    return static_cast<std::size_t>(binary.count());
}

void OccupancyGrid::validate() const {
    if (!(cell_size > 0.0)) {
        throw InvalidArgument("OccupancyGrid: cell_size must be positive");
    }
    if (binary.rows() != mean_power.rows() || binary.cols() != mean_power.cols() ||
        counts.rows() != mean_power.rows() || counts.cols() != mean_power.cols()) {
        throw DimensionMismatch("OccupancyGrid: layer dimensions differ");
    }
}

OccupancyGrid build_occupancy(const std::vector<RadarFrame>& frames, const OccupancyOptions& options) {
    if (frames.empty()) {
        throw EmptyWindow("build_occupancy needs at least one frame");
    }
    if (!(options.cell_size > 0.0) || !(options.p_th >= 0.0)) {
        throw InvalidArgument("build_occupancy: need cell_size > 0 and p_th >= 0");
    }
    Eigen::AlignedBox2d box;
    if (options.bounds) {
        box = *options.bounds;
    } else {
        for (const auto& f : frames) {
            const Eigen::Vector2d t = f.pose.translation.head<2>();
            const Eigen::Vector2d ext = Eigen::Vector2d::Constant(f.config.max_range);
            box.extend(t - ext);
            box.extend(t + ext);
        }
    }
    if (box.isEmpty()) {
        throw InvalidArgument("build_occupancy: empty bounds");
    }

    OccupancyGrid g;
    g.cell_size = options.cell_size;
    g.p_th = options.p_th;
    const double c = options.cell_size;
    g.origin = (box.min() / c).array().floor().matrix() * c;
    const auto w = static_cast<long>(std::ceil((box.max().x() - g.origin.x()) / c));
    const auto h = static_cast<long>(std::ceil((box.max().y() - g.origin.y()) / c));
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(h, w);
    g.counts = Eigen::MatrixXi::Zero(h, w);
    g.mean_power = Eigen::MatrixXd::Zero(h, w);
    g.binary = Eigen::MatrixXi::Zero(h, w);

    for (const auto& f : frames) {
        f.validate();
        const RadarConfig& cfg = f.config;
        const std::size_t first = cfg.first_valid_bin();
        for (std::size_t az = 0; az < cfg.n_azimuth; ++az) {
            const double th = beam_azimuth(az, cfg);
            const Eigen::Vector3d dir(std::cos(th), std::sin(th), 0.0);
            for (std::size_t n = first; n < cfg.n_range; ++n) {
                const Eigen::Vector3d p = f.pose.to_world(bin_to_range(n, cfg) * dir);
                long ix = 0, iy = 0;
                if (!g.cell_of(p.head<2>(), ix, iy)) continue;
                sum(iy, ix) += f.power(static_cast<Eigen::Index>(az), static_cast<Eigen::Index>(n));
                g.counts(iy, ix) += 1;
            }
        }
    }

    for (long iy = 0; iy < h; ++iy) {
        for (long ix = 0; ix < w; ++ix) {
            if (g.counts(iy, ix) == 0) continue;
            const double m = sum(iy, ix) / static_cast<double>(g.counts(iy, ix));
            g.mean_power(iy, ix) = m;
            g.binary(iy, ix) = m > options.p_th ? 1 : 0;
        }
    }
    return g;
}

std::vector<std::size_t> window_indices(std::size_t center, std::size_t total, std::size_t window) {
    if (window == 0 || total == 0) {
        throw EmptyWindow("window_indices: empty window or sequence");
    }
    if (center >= total) {
        throw OutOfRange("window_indices: center outside the sequence");
    }
    window = std::min(window, total);
    const long half = static_cast<long>(window / 2);
    long start = static_cast<long>(center) - half;
    start = std::clamp(start, 0L, static_cast<long>(total - window));
    std::vector<std::size_t> out(window);
    for (std::size_t i = 0; i < window; ++i) out[i] = static_cast<std::size_t>(start) + i;
    return out;
}

Image grid_to_polar(const OccupancyGrid& grid, const Pose& pose, const RadarConfig& cfg) {
    Image out = Image::Zero(static_cast<Eigen::Index>(cfg.n_azimuth), static_cast<Eigen::Index>(cfg.n_range));
    if (grid.empty() || grid.occupied() == 0) return out;
    for (std::size_t az = 0; az < cfg.n_azimuth; ++az) {
        const double th = beam_azimuth(az, cfg);
        const Eigen::Vector3d dir(std::cos(th), std::sin(th), 0.0);
        for (std::size_t n = 0; n < cfg.n_range; ++n) {
            const Eigen::Vector3d p = pose.to_world(bin_to_range(n, cfg) * dir);
            long ix = 0, iy = 0;
            if (grid.cell_of(p.head<2>(), ix, iy) && grid.binary(iy, ix)) {
                out(static_cast<Eigen::Index>(az), static_cast<Eigen::Index>(n)) = 1.0;
            }
        }
    }
    return out;
}

}  // namespace polarsplat
