#pragma once

#include <vector>

#include "polarsplat/config.hpp"
#include "polarsplat/metrics.hpp"

namespace polarsplat {

struct DenoisedSequence {
    std::vector<RadarFrame> frames;
    std::vector<NoiseReport> reports;
    MultipathSourceMap source_map;
    SourceMapStats stats;
};

/// detect_noise and denoise_frame on every frame, then the multipath source map
/// from the raw frames.
DenoisedSequence denoise_sequence(const std::vector<RadarFrame>& raw, const RunConfig& config);

/// Frames whose index is congruent to holdout_every / 2 modulo holdout_every;
/// empty when holdout_every is 0.
std::vector<std::size_t> holdout_indices(std::size_t n, std::size_t holdout_every);
std::vector<std::size_t> training_indices(std::size_t n, std::size_t holdout_every);

/// Polar occupancy target for each selected frame, built from a window of the
/// selected frames centered on it.
std::vector<Image> occupancy_targets(const std::vector<RadarFrame>& frames, const std::vector<std::size_t>& selected,
                                     const OccupancyConfig& config);

/// Training targets for the selected frames. When compose_multipath is set and
/// a frame has multipath detections, the multipath image rendered from the
/// source map is attached and also added to the target.
std::vector<FrameTarget> make_targets(const DenoisedSequence& seq, const std::vector<std::size_t>& selected,
                                      const RunConfig& config);

/// Occupied BEV cells of the alpha renders thresholded at 0.5 and accumulated
/// over the poses.
PointSet2D rendered_occupancy(const Renderer& renderer, const GaussianScene& scene, const std::vector<Pose>& poses,
                              double cell_size);

/// Ground-truth wall samples within max_range of at least one pose.
PointSet2D ground_truth_in_range(const SceneSpec& spec, const std::vector<Pose>& poses, double max_range,
                                 double spacing);

}  // namespace polarsplat
