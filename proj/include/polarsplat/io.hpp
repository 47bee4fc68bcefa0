#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarsplat/core.hpp"
#include "polarsplat/multipath.hpp"
#include "polarsplat/noise.hpp"
#include "polarsplat/occupancy.hpp"
#include "polarsplat/splat.hpp"
#include "polarsplat/synth.hpp"

namespace polarsplat {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kCheckpointFormat = "polarsplat-checkpoint-1";

/// Parses a JSON file; // and /* */ comments are allowed. Throws IoError.
Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);

/// 16-bit grayscale PNG; values are clamped to [0, 1] and quantized to 1/65535.
void write_png16(const fs::path& path, const Image& img);
/// 8-bit grayscale PNG; values are clamped to [0, 1] and quantized to 1/255.
void write_png8(const fs::path& path, const Image& img);
/// Reads an 8- or 16-bit grayscale PNG into [0, 1].
Image read_png(const fs::path& path);

Json to_json(const RadarConfig& c);
/// Starts from `base` and overrides the keys present; unknown keys throw ConfigError.
RadarConfig radar_config_from_json(const Json& j, RadarConfig base = {});
Json to_json(const Pose& p);
Pose pose_from_json(const Json& j);

/// frame_NNNN.png plus frame_NNNN.json (pose, timestamp, radar config).
void save_frame(const fs::path& dir, std::size_t index, const RadarFrame& frame);
RadarFrame load_frame(const fs::path& png);
/// Sorted frame_*.png paths in dir. Throws IoError when dir is missing.
std::vector<fs::path> list_frames(const fs::path& dir);
std::vector<RadarFrame> load_frames(const fs::path& dir);
std::string frame_stem(std::size_t index);

Json to_json(const NoiseReport& r);
NoiseReport noise_report_from_json(const Json& j);

Json to_json(const MultipathSourceMap& m);
MultipathSourceMap source_map_from_json(const Json& j);

Json to_json(const GaussianScene& s);
GaussianScene scene_from_json(const Json& j);
void save_checkpoint(const fs::path& path, const GaussianScene& s);
GaussianScene load_checkpoint(const fs::path& path);

Json to_json(const SceneSpec& s);
SceneSpec scene_spec_from_json(const Json& j);

/// Binary layer as an 8-bit PNG (occupied = 255) plus a JSON sidecar with the
/// geometry; mean power and counts are not stored.
/// Top-down view of a polar frame, sensor at the center, +x to the right and
/// +y up; `size` pixels span [-max_range, max_range] on each axis.
Image polar_to_cartesian(const Image& polar, const RadarConfig& cfg, std::size_t size);

void save_occupancy(const fs::path& png, const OccupancyGrid& g);
OccupancyGrid load_occupancy(const fs::path& png);

}  // namespace polarsplat
