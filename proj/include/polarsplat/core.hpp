#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <numbers>

#include "polarsplat/errors.hpp"

namespace polarsplat {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 3.0e8;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Row-major polar image: rows are azimuth beams, columns are range bins.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// Scanning radar geometry and acquisition parameters. Defaults describe a
/// Navtech CIR304-H style sensor cropped to 50 m.
struct RadarConfig {
    std::size_t n_azimuth = 400;
    std::size_t n_range = 839;
    double range_resolution = 0.0596;    // m
    double max_range = 50.0;             // m
    double min_valid_range = 2.5;        // m, closer returns are masked
    double azimuth_resolution = 0.9;     // deg
    double sampling_duration = 565e-6;   // s
    double chirp_slope = 1.6e12;         // Hz/s
    double beam_spread = 1.8;            // deg between -3 dB points
    double transmit_scale = 1.0e4;       // absorbs P_t, lambda^2, L and (4 pi)^3

    /// Throws InvalidArgument when an invariant does not hold.
    void validate() const;

    double azimuth_step_rad() const { return deg2rad(azimuth_resolution); }
    /// First range bin whose center is at or beyond min_valid_range.
    std::size_t first_valid_bin() const;
};

/// Rigid transform sensor -> world.
struct Pose {
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

    static Pose from_xy_yaw(double x, double y, double yaw, double z = 0.0);

    Eigen::Vector3d to_world(const Eigen::Vector3d& p_sensor) const;
    Eigen::Vector3d to_sensor(const Eigen::Vector3d& p_world) const;
    Pose inverse() const;
    double yaw() const;

    /// Throws InvalidArgument unless |q| = 1 within 1e-9.
    void validate() const;
};

/// this * other: apply `other` first, then `this`.
Pose compose(const Pose& a, const Pose& b);

struct RadarFrame {
    RadarConfig config;
    Pose pose;
    Image power;  // n_azimuth x n_range, values in [0, 1]
    double timestamp = 0.0;

    static RadarFrame zeros(const RadarConfig& cfg, const Pose& pose = {}, double timestamp = 0.0);
    void validate() const;
};

struct SphericalPoint {
    double r = 0.0;
    double theta = 0.0;  // azimuth
    double phi = 0.0;    // elevation, negative below the sensor plane
};

SphericalPoint cart_to_spherical(const Eigen::Vector3d& p);
Eigen::Vector3d spherical_to_cart(const SphericalPoint& s);

/// d(r, theta, phi) / d(x, y, z). Throws PoleSingularity when r^2 - z^2 < eps.
Eigen::Matrix3d spherical_jacobian(const Eigen::Vector3d& p, double eps = 1e-12);

/// Range of the center of bin n.
double bin_to_range(std::size_t n, const RadarConfig& cfg);
/// Beam azimuth (sensor frame, radians) of row h; row 0 is +x, increasing CCW.
double beam_azimuth(std::size_t h, const RadarConfig& cfg);
/// Nearest beam row for a sensor-frame azimuth.
std::size_t azimuth_to_beam(double theta, const RadarConfig& cfg);

}  // namespace polarsplat
