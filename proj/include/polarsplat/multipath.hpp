#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "polarsplat/core.hpp"
#include "polarsplat/noise.hpp"

namespace polarsplat {

struct MultipathSource {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // world
    double theta_view = 0.0;  // world azimuth from the capture pose to the source, rad
    double r_view = 0.0;      // BEV range from the capture pose, m
    double amplitude = 0.0;   // A_m
    double gamma = 0.0;       // per-bin attenuation
    std::size_t k_m = 0;
    double magnitude = 0.0;   // |X[k_m]|
    double phase = 0.0;       // arg X[k_m], re-referenced so that n = 0 is the source bin
    std::size_t n_bins = 0;   // N of the capturing beam
    std::size_t merged = 1;   // detections averaged into this source

    void validate() const;
};

struct MultipathSourceMap {
    std::vector<MultipathSource> sources;
};

/// d_m = N dr / k_m.
double source_distance(std::size_t k_m, const RadarConfig& cfg);

/// x_m[n] = |X[k_m]| / N * cos(2 pi k_m n / N + phase), n in [0, N).
std::vector<double> reconstruct_component(std::size_t k_m, double magnitude, double phase, std::size_t n_bins);

struct AttenuationFit {
    double amplitude = 0.0;
    double gamma = 0.0;
};

/// Fits raw[n] ~ A exp(-gamma n) component[n] over n >= first. A log-linear fit
/// through the ratios at the component's crests gives the start point, followed
/// by one Gauss-Newton step on the samples where the component is positive.
AttenuationFit fit_attenuation(std::span<const double> raw, std::span<const double> component,
                               std::size_t first = 0);

struct SourceMapOptions {
    double merge_radius = 0.5;           // m
    double merge_angle = deg2rad(5.0);   // rad, on theta_view
    double sigma_bins = kDefaultDenoiseSigma;
};

struct SourceMapStats {
    std::size_t detections = 0;
    std::size_t skipped = 0;
    std::size_t merged = 0;
};

/// One source per multipath record, anchored at the strongest return of the
/// denoised beam. Frames are processed in order; a source within the merge
/// radius and view-angle window of an existing one is averaged into it.
MultipathSourceMap build_source_map(const std::vector<RadarFrame>& frames, const std::vector<NoiseReport>& reports,
                                    const SourceMapOptions& options = {}, SourceMapStats* stats = nullptr);

struct MultipathRenderOptions {
    double r_th = 0.5;               // m
    double theta_th = deg2rad(10.0); // rad
};

/// Signed sum of all gated source tails, before clamping.
Image render_multipath_raw(const MultipathSourceMap& map, const Pose& pose, const RadarConfig& cfg,
                           const MultipathRenderOptions& options = {});
/// render_multipath_raw clamped to [0, 1].
Image render_multipath(const MultipathSourceMap& map, const Pose& pose, const RadarConfig& cfg,
                       const MultipathRenderOptions& options = {});

}  // namespace polarsplat
