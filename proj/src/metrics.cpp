#include "polarsplat/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace polarsplat {
namespace {

double sq(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    return dx * dx + dy * dy;
}

void require_nonempty(const PointSet2D& p, const PointSet2D& q) {
    if (p.empty() || q.empty()) {
        throw EmptySet("metric needs two nonempty point sets");
    }
}

// Scale-aware hash cell: roughly sqrt(area / n) so rings stay small.
double pick_cell(const PointSet2D& pts) {
    Eigen::AlignedBox2d box;
    for (const auto& p : pts) box.extend(p);
    const double area = std::max(box.sizes().prod(), 1e-12);
    const double c = std::sqrt(area / static_cast<double>(pts.size()));
    return std::max(c, 1e-9);
}

std::vector<double> nn_squared(const PointSet2D& from, const PointSet2D& to) {
    std::vector<double> out(from.size());
    if (to.size() <= 16) {
        for (std::size_t i = 0; i < from.size(); ++i) out[i] = brute_force_squared_distance(to, from[i]);
        return out;
    }
    const NearestNeighbor nn(to, pick_cell(to));
    for (std::size_t i = 0; i < from.size(); ++i) out[i] = nn.squared_distance(from[i]);
    return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, std::size_t first_col) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch("psnr: image sizes differ");
    }
    const auto c0 = static_cast<Eigen::Index>(std::min<std::size_t>(first_col, static_cast<std::size_t>(a.cols())));
    const Eigen::Index cols = a.cols() - c0;
    if (a.rows() == 0 || cols == 0) {
        throw DimensionMismatch("psnr: no pixels to compare");
    }
    const double mse = (a.rightCols(cols) - b.rightCols(cols)).array().square().mean();
    if (mse == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(1.0 / mse);
}

NearestNeighbor::NearestNeighbor(const PointSet2D& points, double cell_size) : points_(points), cell_(cell_size) {
    if (!(cell_size > 0.0)) {
        throw InvalidArgument("NearestNeighbor: cell size must be positive");
    }
    if (points.empty()) {
        throw EmptySet("NearestNeighbor: no points");
    }
    bool first = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const long ix = static_cast<long>(std::floor(points[i].x() / cell_));
        const long iy = static_cast<long>(std::floor(points[i].y() / cell_));
        cells_[key(ix, iy)].push_back(i);
        if (first) {
            min_x_ = max_x_ = ix;
            min_y_ = max_y_ = iy;
            first = false;
        } else {
            min_x_ = std::min(min_x_, ix);
            max_x_ = std::max(max_x_, ix);
            min_y_ = std::min(min_y_, iy);
            max_y_ = std::max(max_y_, iy);
        }
    }
}

std::uint64_t NearestNeighbor::key(long ix, long iy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy));
}

double NearestNeighbor::squared_distance(const Eigen::Vector2d& q) const {
    const long cx = static_cast<long>(std::floor(q.x() / cell_));
    const long cy = static_cast<long>(std::floor(q.y() / cell_));
    // rings before `first` miss the occupied box, rings after `last` cover no stored cell
    const long first = std::max({0L, min_x_ - cx, cx - max_x_, min_y_ - cy, cy - max_y_});
    const long last = std::max({std::abs(cx - min_x_), std::abs(cx - max_x_), std::abs(cy - min_y_), std::abs(cy - max_y_)});
    double best = std::numeric_limits<double>::infinity();
    auto visit = [&](long ix, long iy) {
        const auto it = cells_.find(key(ix, iy));
        if (it == cells_.end()) return;
        for (std::size_t i : it->second) best = std::min(best, sq(points_[i], q));
    };
    for (long k = first; k <= last; ++k) {
        const long x0 = std::max(cx - k, min_x_), x1 = std::min(cx + k, max_x_);
        for (long iy : {cy - k, cy + k}) {
            if (iy < min_y_ || iy > max_y_) continue;
            for (long ix = x0; ix <= x1; ++ix) visit(ix, iy);
            if (k == 0) break;
        }
        const long y0 = std::max(cy - k + 1, min_y_), y1 = std::min(cy + k - 1, max_y_);
        for (long ix : {cx - k, cx + k}) {
            if (k == 0 || ix < min_x_ || ix > max_x_) continue;
            for (long iy = y0; iy <= y1; ++iy) visit(ix, iy);
        }
        // points in ring k + 1 and beyond are at least k cells away
        const double bound = static_cast<double>(k) * cell_;
        if (best <= bound * bound) break;
    }
    return best;
}

double NearestNeighbor::distance(const Eigen::Vector2d& q) const {
    return std::sqrt(squared_distance(q));
}

double brute_force_squared_distance(const PointSet2D& points, const Eigen::Vector2d& q) {
    if (points.empty()) {
        throw EmptySet("brute_force_squared_distance: no points");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::min(best, sq(p, q));
    return best;
}

double chamfer(const PointSet2D& p, const PointSet2D& q) {
    require_nonempty(p, q);
    const auto a = nn_squared(p, q);
    const auto b = nn_squared(q, p);
    double sa = 0.0, sb = 0.0;
    for (double v : a) sa += v;
    for (double v : b) sb += v;
    return sa / static_cast<double>(p.size()) + sb / static_cast<double>(q.size());
}

double relative_chamfer(const PointSet2D& p, const PointSet2D& q) {
    require_nonempty(p, q);
    double diam2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = i + 1; j < q.size(); ++j) diam2 = std::max(diam2, sq(q[i], q[j]));
    }
    if (!(diam2 > 0.0)) {
        throw DegenerateGroundTruth("relative_chamfer: ground-truth points coincide");
    }
    return chamfer(p, q) / diam2;
}

MatchScores accuracy_precision_recall(const PointSet2D& p, const PointSet2D& q, double tau) {
    require_nonempty(p, q);
    if (!(tau > 0.0)) {
        throw InvalidArgument("accuracy_precision_recall: tau must be positive");
    }
    const auto a = nn_squared(p, q);
    const auto b = nn_squared(q, p);
    auto within = [tau](double v) { return std::sqrt(v) < tau; };
    const auto hit_p = static_cast<double>(std::count_if(a.begin(), a.end(), within));
    const auto hit_q = static_cast<double>(std::count_if(b.begin(), b.end(), within));
    MatchScores s;
    s.precision = hit_p / static_cast<double>(p.size());
    s.recall = hit_q / static_cast<double>(q.size());
    s.accuracy = (hit_p + hit_q) / static_cast<double>(p.size() + q.size());
    return s;
}

double geometry_rmse(const PointSet2D& p, const PointSet2D& q) {
    return std::sqrt(0.5 * chamfer(p, q));
}

PointSet2D occupancy_to_points(const OccupancyGrid& grid) {
    PointSet2D out;
    for (Eigen::Index iy = 0; iy < grid.binary.rows(); ++iy) {
        for (Eigen::Index ix = 0; ix < grid.binary.cols(); ++ix) {
            if (grid.binary(iy, ix)) out.push_back(grid.cell_center(ix, iy));
        }
    }
    return out;
}

}  // namespace polarsplat
