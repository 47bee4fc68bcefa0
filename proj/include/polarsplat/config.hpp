#pragma once

#include <string>
#include <vector>

#include "polarsplat/io.hpp"
#include "polarsplat/train.hpp"

namespace polarsplat {

struct TrajectoryConfig {
    std::string type = "line";  // "line" or "arc"
    Eigen::Vector2d start = Eigen::Vector2d(-3.0, 0.0);
    Eigen::Vector2d end = Eigen::Vector2d(3.0, 0.0);
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 5.0;
    double start_angle = 0.0;  // rad
    double end_angle = 1.0;    // rad
    std::size_t frames = 40;

    std::vector<Pose> poses() const;
};

struct SynthConfig {
    TrajectoryConfig trajectory;
    InjectionConfig noise;
    double frame_interval = 0.25;  // s
};

struct OccupancyConfig {
    std::size_t window = 10;
    OccupancyOptions options;
};

struct FitConfig {
    TrainConfig train;
    SceneInitOptions init;
    std::size_t holdout_every = 0;  // every k-th frame is held out; 0 keeps all
    std::size_t log_every = 50;
};

struct EvalConfig {
    double tau = 0.5;               // m
    double gt_spacing = 0.1;        // m, ground-truth wall sampling
};

struct RunConfig {
    RadarConfig radar;
    NoiseThresholds noise;
    double denoise_sigma = kDefaultDenoiseSigma;
    SourceMapOptions source_map;
    MultipathRenderOptions multipath;
    OccupancyConfig occupancy;
    RenderOptions render;
    FitConfig fit;
    SynthConfig synth;
    EvalConfig eval;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Overrides the defaults with the keys present; unknown keys and bad values
/// throw ConfigError naming the key.
RunConfig run_config_from_json(const Json& j, RunConfig base = {});
Json to_json(const RunConfig& c);
RunConfig load_run_config(const fs::path& path);

}  // namespace polarsplat
