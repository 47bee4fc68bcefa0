#include "polarsplat/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace polarsplat {

double wrap_angle(double a) {
    double w = std::fmod(a + kPi, kTwoPi);
    if (w < 0.0) {
        w += kTwoPi;
    }
    w -= kPi;
    // fmod can land exactly on +pi after rounding
    return w >= kPi ? w - kTwoPi : w;
}

void RadarConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw InvalidArgument("RadarConfig: " + what);
        }
    };
    require(n_azimuth > 0, "n_azimuth must be positive");
    require(n_range > 1, "n_range must be at least 2");
    require(range_resolution > 0.0, "range_resolution must be positive");
    require(max_range > 0.0, "max_range must be positive");
    require(min_valid_range >= 0.0, "min_valid_range must be non-negative");
    require(azimuth_resolution > 0.0, "azimuth_resolution must be positive");
    require(sampling_duration > 0.0, "sampling_duration must be positive");
    require(chirp_slope > 0.0, "chirp_slope must be positive");
    require(beam_spread > 0.0, "beam_spread must be positive");
    require(transmit_scale > 0.0, "transmit_scale must be positive");
    require(std::abs(static_cast<double>(n_range) * range_resolution - max_range) <= range_resolution,
            "n_range * range_resolution must match max_range within one bin");
    require(std::abs(static_cast<double>(n_azimuth) * azimuth_resolution - 360.0) < 1e-6,
            "n_azimuth * azimuth_resolution must equal 360 deg");
}

std::size_t RadarConfig::first_valid_bin() const {
    // smallest n with (n + 0.5) * dr >= min_valid_range
    const double n = std::ceil(min_valid_range / range_resolution - 0.5 - 1e-12);
    return n <= 0.0 ? 0 : static_cast<std::size_t>(n);
}

Pose Pose::from_xy_yaw(double x, double y, double yaw, double z) {
    Pose p;
    p.translation = Eigen::Vector3d(x, y, z);
    p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
    return p;
}

Eigen::Vector3d Pose::to_world(const Eigen::Vector3d& p_sensor) const {
    return rotation * p_sensor + translation;
}

Eigen::Vector3d Pose::to_sensor(const Eigen::Vector3d& p_world) const {
    return rotation.conjugate() * (p_world - translation);
}

Pose Pose::inverse() const {
    Pose inv;
    inv.rotation = rotation.conjugate();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

double Pose::yaw() const {
    const Eigen::Vector3d x_axis = rotation * Eigen::Vector3d::UnitX();
    return std::atan2(x_axis.y(), x_axis.x());
}

void Pose::validate() const {
    if (std::abs(rotation.norm() - 1.0) > 1e-9) {
        throw InvalidArgument("Pose: rotation quaternion is not unit length");
    }
    if (!translation.allFinite()) {
        throw InvalidArgument("Pose: non-finite translation");
    }
}

Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

RadarFrame RadarFrame::zeros(const RadarConfig& cfg, const Pose& pose, double timestamp) {
    RadarFrame f;
    f.config = cfg;
    f.pose = pose;
    f.power = Image::Zero(static_cast<Eigen::Index>(cfg.n_azimuth), static_cast<Eigen::Index>(cfg.n_range));
    f.timestamp = timestamp;
    return f;
}

void RadarFrame::validate() const {
    if (static_cast<std::size_t>(power.rows()) != config.n_azimuth ||
        static_cast<std::size_t>(power.cols()) != config.n_range) {
        throw DimensionMismatch("RadarFrame: power matrix does not match config dimensions");
    }
    if (power.size() > 0 && (!power.allFinite() || power.minCoeff() < 0.0 || power.maxCoeff() > 1.0)) {
        throw InvalidArgument("RadarFrame: power values must lie in [0, 1]");
    }
    pose.validate();
}

SphericalPoint cart_to_spherical(const Eigen::Vector3d& p) {
    const double r = p.norm();
    if (r == 0.0) {
        return {};
    }
    const double s = std::clamp(p.z() / r, -1.0, 1.0);
    return {r, std::atan2(p.y(), p.x()), std::asin(s)};
}

Eigen::Vector3d spherical_to_cart(const SphericalPoint& s) {
    const double c = std::cos(s.phi);
    return {s.r * c * std::cos(s.theta), s.r * c * std::sin(s.theta), s.r * std::sin(s.phi)};
}

Eigen::Matrix3d spherical_jacobian(const Eigen::Vector3d& p, double eps) {
    const double x = p.x();
    const double y = p.y();
    const double z = p.z();
    const double r2 = p.squaredNorm();
    const double rho2 = r2 - z * z;
    if (r2 <= 0.0 || rho2 < eps) {
        throw PoleSingularity("point lies on the elevation pole");
    }
    const double r = std::sqrt(r2);
    const double rho = std::sqrt(rho2);
    const double xy2 = x * x + y * y;
    Eigen::Matrix3d J;
    J << x / r, y / r, z / r,
         -y / xy2, x / xy2, 0.0,
         -x * z / (r2 * rho), -y * z / (r2 * rho), rho / r2;
    return J;
}

double bin_to_range(std::size_t n, const RadarConfig& cfg) {
    if (n >= cfg.n_range) {
        throw OutOfRange("range bin " + std::to_string(n) + " >= " + std::to_string(cfg.n_range));
    }
    return (static_cast<double>(n) + 0.5) * cfg.range_resolution;
}

double beam_azimuth(std::size_t h, const RadarConfig& cfg) {
    return wrap_angle(static_cast<double>(h) * cfg.azimuth_step_rad());
}

std::size_t azimuth_to_beam(double theta, const RadarConfig& cfg) {
    const auto n = static_cast<long long>(cfg.n_azimuth);
    long long h = std::llround(theta / cfg.azimuth_step_rad());
    h %= n;
    if (h < 0) {
        h += n;
    }
    return static_cast<std::size_t>(h);
}

}  // namespace polarsplat
