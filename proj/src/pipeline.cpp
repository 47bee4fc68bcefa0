#include "polarsplat/pipeline.hpp"

#include <algorithm>

namespace polarsplat {

DenoisedSequence denoise_sequence(const std::vector<RadarFrame>& raw, const RunConfig& config) {
    DenoisedSequence seq;
    seq.frames.reserve(raw.size());
    seq.reports.reserve(raw.size());
    for (const auto& f : raw) {
        seq.reports.push_back(detect_noise(f, config.noise));
        seq.frames.push_back(denoise_frame(f, seq.reports.back(), config.denoise_sigma));
    }
    seq.source_map = build_source_map(raw, seq.reports, config.source_map, &seq.stats);
    return seq;
}

std::vector<std::size_t> holdout_indices(std::size_t n, std::size_t holdout_every) {
    std::vector<std::size_t> out;
    if (holdout_every == 0) return out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % holdout_every == holdout_every / 2) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> training_indices(std::size_t n, std::size_t holdout_every) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (holdout_every == 0 || i % holdout_every != holdout_every / 2) out.push_back(i);
    }
    return out;
}

std::vector<Image> occupancy_targets(const std::vector<RadarFrame>& frames, const std::vector<std::size_t>& selected,
                                     const OccupancyConfig& config) {
    std::vector<Image> out;
    out.reserve(selected.size());
    for (std::size_t k = 0; k < selected.size(); ++k) {
        std::vector<RadarFrame> window;
        for (std::size_t j : window_indices(k, selected.size(), config.window)) window.push_back(frames.at(selected[j]));
        const RadarFrame& f = frames.at(selected[k]);
        out.push_back(grid_to_polar(build_occupancy(window, config.options), f.pose, f.config));
    }
    return out;
}

std::vector<FrameTarget> make_targets(const DenoisedSequence& seq, const std::vector<std::size_t>& selected,
                                      const RunConfig& config) {
    const std::vector<Image> occ = occupancy_targets(seq.frames, selected, config.occupancy);
    std::vector<FrameTarget> out;
    out.reserve(selected.size());
    for (std::size_t k = 0; k < selected.size(); ++k) {
        const std::size_t i = selected[k];
        const RadarFrame& f = seq.frames.at(i);
        FrameTarget t{f.pose, f.power, occ[k], std::nullopt};
        const bool flagged = i < seq.reports.size() && !seq.reports[i].multipath.empty();
        if (config.fit.train.compose_multipath && flagged && !seq.source_map.sources.empty()) {
            Image m = render_multipath(seq.source_map, f.pose, f.config, config.multipath);
            t.gt = compose_final(t.gt, m);
            t.multipath = std::move(m);
        }
        out.push_back(std::move(t));
    }
    return out;
}

PointSet2D rendered_occupancy(const Renderer& renderer, const GaussianScene& scene, const std::vector<Pose>& poses,
                              double cell_size) {
    std::vector<RadarFrame> frames;
    frames.reserve(poses.size());
    for (const auto& pose : poses) {
        RadarFrame f = RadarFrame::zeros(renderer.config(), pose);
        const Image a = renderer.render(scene, pose, RenderMode::Alpha);
        f.power = (a.array() > 0.5).cast<double>().matrix();
        frames.push_back(std::move(f));
    }
    OccupancyOptions opt;
    opt.p_th = 0.5;
    opt.cell_size = cell_size;
    return occupancy_to_points(build_occupancy(frames, opt));
}

PointSet2D ground_truth_in_range(const SceneSpec& spec, const std::vector<Pose>& poses, double max_range,
                                 double spacing) {
    PointSet2D out;
    for (const auto& q : scene_ground_truth(spec, spacing)) {
        if (std::any_of(poses.begin(), poses.end(),
                        [&](const Pose& p) { return (q - p.translation.head<2>()).norm() < max_range; })) {
            out.push_back(q);
        }
    }
    return out;
}

}  // namespace polarsplat
