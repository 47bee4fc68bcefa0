#pragma once

#include <cstdint>
#include <vector>

#include "polarsplat/antenna.hpp"
#include "polarsplat/core.hpp"

namespace polarsplat {

struct PointScatterer {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double rcs = 0.0;
};

/// Vertical wall between two BEV endpoints, spanning [z_min, z_max].
struct WallSegment {
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    double rcs_per_meter = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;

    double length() const { return (b - a).norm(); }
};

struct SceneSpec {
    std::vector<PointScatterer> points;
    std::vector<WallSegment> walls;

    bool empty() const { return points.empty() && walls.empty(); }
    void validate() const;
};

struct ReflectorSample {
    Eigen::Vector3d position;
    double rcs;
};

/// Discretizes every reflector. Walls are sampled every `spacing` meters along
/// their length and height; the per-meter RCS is split evenly over the height
/// samples.
std::vector<ReflectorSample> scene_samples(const SceneSpec& spec, double spacing);

/// BEV ground-truth points along the walls (and the point scatterers), spaced
/// `spacing` meters apart.
std::vector<Eigen::Vector2d> scene_ground_truth(const SceneSpec& spec, double spacing);

/// Clean radar frame from the radar equation: every sample adds
/// transmit_scale * G_theta(dtheta)^2 * G_phi(phi)^2 * rcs / R^4 to the bin
/// containing R on each nearby beam, then the leakage kernel blurs along range
/// and the result is clamped to [0, 1].
RadarFrame simulate_frame(const SceneSpec& spec, const Pose& pose, const RadarConfig& cfg,
                          const AntennaGains& gains, double timestamp = 0.0);
RadarFrame simulate_frame(const SceneSpec& spec, const Pose& pose, const RadarConfig& cfg);

/// Same as simulate_frame but without the final clamp.
Image simulate_power(const SceneSpec& spec, const Pose& pose, const RadarConfig& cfg,
                     const AntennaGains& gains);

RadarFrame inject_saturation(const RadarFrame& frame, const std::vector<std::size_t>& beams, double offset);

/// Adds a half-rectified decaying cosine behind source_bin, scaled by the
/// power already present at source_bin.
RadarFrame inject_multipath(const RadarFrame& frame, std::size_t beam, std::size_t source_bin,
                            double period_m, double amplitude, double gamma);

/// Adds i.i.d. exponential noise with the given mean to every bin.
RadarFrame inject_speckle(const RadarFrame& frame, double level, std::uint64_t seed);

struct InjectionConfig {
    bool enabled = true;
    std::size_t saturated_beams = 6;
    double saturation_offset = 0.3;
    std::size_t multipath_beams = 1;
    double multipath_period = 10.0;  // m
    double multipath_amplitude = 0.4;
    double multipath_gamma = 0.002;
    double speckle = 0.005;

    void validate(const RadarConfig& cfg) const;
};

struct InjectionRecord {
    std::vector<std::size_t> saturated;       // includes the multipath beams
    std::vector<std::size_t> multipath;
    std::vector<std::size_t> multipath_bins;  // source bin per multipath beam
};

/// All three noise types on one frame. Multipath beams are drawn among beams
/// whose peak is at least 0.2, start at that peak and also carry the
/// saturation offset; the remaining saturated beams are drawn from the other
/// beams. Speckle goes on last.
RadarFrame inject_noise(const RadarFrame& clean, const InjectionConfig& config, std::uint64_t seed,
                        InjectionRecord* record = nullptr);

/// Corridor closed at one end: side walls at y = -4 and y = 4 from x = -10 to
/// 8 and an end wall at x = 8, all spanning z in [-1, 1.5].
SceneSpec three_wall_scene(double rcs_per_meter = 4.0);

/// n poses evenly spaced from a to b (inclusive), yaw along the direction of travel plus yaw_offset.
std::vector<Pose> line_trajectory(const Eigen::Vector2d& a, const Eigen::Vector2d& b, std::size_t n,
                                  double yaw_offset = 0.0);

/// n poses on a circular arc around `center`, from angle start to end (rad), facing along the tangent.
std::vector<Pose> arc_trajectory(const Eigen::Vector2d& center, double radius, double start, double end,
                                 std::size_t n);

}  // namespace polarsplat
