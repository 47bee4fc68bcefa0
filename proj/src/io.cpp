#include "polarsplat/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace polarsplat {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    return f;
}

void write_png(const fs::path& path, const Image& img, int depth) {
    if (img.rows() == 0 || img.cols() == 0) {
        throw IoError("refusing to write an empty image to '" + path.string() + "'");
    }
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng initialization failed");
    }
    const auto width = static_cast<std::size_t>(img.cols());
    const std::size_t bytes = depth == 16 ? 2 : 1;
    std::vector<unsigned char> row(width * bytes);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols()), static_cast<png_uint_32>(img.rows()), depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const double scale = depth == 16 ? 65535.0 : 255.0;
    for (Eigen::Index r = 0; r < img.rows(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double v = std::clamp(img(r, static_cast<Eigen::Index>(c)), 0.0, 1.0);
            const auto q = static_cast<unsigned>(std::lround(v * scale));
            if (depth == 16) {
                row[2 * c] = static_cast<unsigned char>(q >> 8);
                row[2 * c + 1] = static_cast<unsigned char>(q & 0xff);
            } else {
                row[c] = static_cast<unsigned char>(q);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

template <typename T>
void take(const Json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

Json vec(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json vec(const Eigen::Vector2d& v) { return Json::array({v.x(), v.y()}); }

Eigen::Vector3d vec3(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::Vector2d vec2(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("expected a 2-vector");
    return {j[0].get<double>(), j[1].get<double>()};
}

fs::path sidecar(const fs::path& png) {
    fs::path p = png;
    return p.replace_extension(".json");
}

}  // namespace

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

void write_png16(const fs::path& path, const Image& img) { write_png(path, img, 16); }
void write_png8(const fs::path& path, const Image& img) { write_png(path, img, 8); }

Image read_png(const fs::path& path) {
    FilePtr f = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8)) {
        throw IoError("'" + path.string() + "' is not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng initialization failed");
    }
    Image img;
    std::vector<unsigned char> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed reading PNG '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("'" + path.string() + "' is not an 8- or 16-bit grayscale PNG");
    }
    img.resize(height, width);
    row.resize(png_get_rowbytes(png, info));
    const double scale = depth == 16 ? 65535.0 : 255.0;
    for (png_uint_32 r = 0; r < height; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 c = 0; c < width; ++c) {
            const unsigned v = depth == 16 ? (static_cast<unsigned>(row[2 * c]) << 8 | row[2 * c + 1]) : row[c];
            img(r, c) = static_cast<double>(v) / scale;
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Json to_json(const RadarConfig& c) {
    return Json{{"n_azimuth", c.n_azimuth},
                {"n_range", c.n_range},
                {"range_resolution", c.range_resolution},
                {"max_range", c.max_range},
                {"min_valid_range", c.min_valid_range},
                {"azimuth_resolution", c.azimuth_resolution},
                {"sampling_duration", c.sampling_duration},
                {"chirp_slope", c.chirp_slope},
                {"beam_spread", c.beam_spread},
                {"transmit_scale", c.transmit_scale}};
}

RadarConfig radar_config_from_json(const Json& j, RadarConfig c) {
    check_keys(j,
               {"n_azimuth", "n_range", "range_resolution", "max_range", "min_valid_range", "azimuth_resolution",
                "sampling_duration", "chirp_slope", "beam_spread", "transmit_scale"},
               "radar");
    take(j, "n_azimuth", c.n_azimuth);
    take(j, "n_range", c.n_range);
    take(j, "range_resolution", c.range_resolution);
    take(j, "max_range", c.max_range);
    take(j, "min_valid_range", c.min_valid_range);
    take(j, "azimuth_resolution", c.azimuth_resolution);
    take(j, "sampling_duration", c.sampling_duration);
    take(j, "chirp_slope", c.chirp_slope);
    take(j, "beam_spread", c.beam_spread);
    take(j, "transmit_scale", c.transmit_scale);
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

Json to_json(const Pose& p) {
    const Eigen::Quaterniond& q = p.rotation;
    return Json{{"translation", vec(p.translation)}, {"rotation_wxyz", Json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Pose pose_from_json(const Json& j) {
    check_keys(j, {"translation", "rotation_wxyz"}, "pose");
    Pose p;
    if (j.contains("translation")) p.translation = vec3(j.at("translation"));
    if (j.contains("rotation_wxyz")) {
        const Json& q = j.at("rotation_wxyz");
        if (!q.is_array() || q.size() != 4) throw ConfigError("pose.rotation_wxyz: expected 4 numbers");
        p.rotation = Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
        p.rotation.normalize();
    }
    return p;
}

std::string frame_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04zu", index);
    return buf;
}

void save_frame(const fs::path& dir, std::size_t index, const RadarFrame& frame) {
    fs::create_directories(dir);
    const fs::path png = dir / (frame_stem(index) + ".png");
    write_png16(png, frame.power);
    write_json(sidecar(png), Json{{"timestamp", frame.timestamp}, {"pose", to_json(frame.pose)}, {"radar", to_json(frame.config)}});
}

RadarFrame load_frame(const fs::path& png) {
    const Json meta = read_json(sidecar(png));
    check_keys(meta, {"timestamp", "pose", "radar"}, "frame");
    RadarFrame f;
    if (meta.contains("radar")) f.config = radar_config_from_json(meta.at("radar"));
    if (meta.contains("pose")) f.pose = pose_from_json(meta.at("pose"));
    take(meta, "timestamp", f.timestamp);
    f.power = read_png(png);
    if (f.power.rows() != static_cast<Eigen::Index>(f.config.n_azimuth) ||
        f.power.cols() != static_cast<Eigen::Index>(f.config.n_range)) {
        throw IoError("'" + png.string() + "' does not match the radar configuration in its sidecar");
    }
    return f;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw IoError("'" + dir.string() + "' is not a directory");
    }
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.rfind("frame_", 0) == 0 && e.path().extension() == ".png") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<RadarFrame> load_frames(const fs::path& dir) {
    std::vector<RadarFrame> out;
    for (const auto& p : list_frames(dir)) out.push_back(load_frame(p));
    return out;
}

Json to_json(const NoiseReport& r) {
    Json mp = Json::array();
    for (const auto& m : r.multipath) {
        mp.push_back({{"azimuth", m.azimuth}, {"k_m", m.k_m}, {"mag", m.magnitude}, {"phase", m.phase}});
    }
    return Json{{"saturated", Json(std::vector<std::size_t>(r.saturated.begin(), r.saturated.end()))},
                {"multipath", mp},
                {"thresholds",
                 {{"constant_ratio", r.thresholds.constant_ratio},
                  {"multipath_constant_ratio", r.thresholds.multipath_constant_ratio},
                  {"peak_magnitude", r.thresholds.peak_magnitude}}}};
}

NoiseReport noise_report_from_json(const Json& j) {
    check_keys(j, {"saturated", "multipath", "thresholds"}, "report");
    NoiseReport r;
    if (j.contains("saturated")) {
        for (const auto& v : j.at("saturated")) r.saturated.insert(v.get<std::size_t>());
    }
    if (j.contains("multipath")) {
        for (const auto& m : j.at("multipath")) {
            check_keys(m, {"azimuth", "k_m", "mag", "phase"}, "report.multipath");
            MultipathRecord rec;
            take(m, "azimuth", rec.azimuth);
            take(m, "k_m", rec.k_m);
            take(m, "mag", rec.magnitude);
            take(m, "phase", rec.phase);
            r.multipath.push_back(rec);
        }
    }
    if (j.contains("thresholds")) {
        const Json& t = j.at("thresholds");
        check_keys(t, {"constant_ratio", "multipath_constant_ratio", "peak_magnitude"}, "report.thresholds");
        take(t, "constant_ratio", r.thresholds.constant_ratio);
        take(t, "multipath_constant_ratio", r.thresholds.multipath_constant_ratio);
        take(t, "peak_magnitude", r.thresholds.peak_magnitude);
    }
    return r;
}

Json to_json(const MultipathSourceMap& m) {
    Json arr = Json::array();
    for (const auto& s : m.sources) {
        arr.push_back({{"position", vec(s.position)},
                       {"theta_view", s.theta_view},
                       {"r_view", s.r_view},
                       {"amplitude", s.amplitude},
                       {"gamma", s.gamma},
                       {"k_m", s.k_m},
                       {"magnitude", s.magnitude},
                       {"phase", s.phase},
                       {"n_bins", s.n_bins},
                       {"merged", s.merged}});
    }
    return arr;
}

MultipathSourceMap source_map_from_json(const Json& j) {
    if (!j.is_array()) {
        throw ConfigError("source map: expected an array of sources");
    }
    MultipathSourceMap m;
    for (const auto& e : j) {
        check_keys(e, {"position", "theta_view", "r_view", "amplitude", "gamma", "k_m", "magnitude", "phase", "n_bins", "merged"},
                   "source_map");
        MultipathSource s;
        if (e.contains("position")) s.position = vec3(e.at("position"));
        take(e, "theta_view", s.theta_view);
        take(e, "r_view", s.r_view);
        take(e, "amplitude", s.amplitude);
        take(e, "gamma", s.gamma);
        take(e, "k_m", s.k_m);
        take(e, "magnitude", s.magnitude);
        take(e, "phase", s.phase);
        take(e, "n_bins", s.n_bins);
        take(e, "merged", s.merged);
        try {
            s.validate();
        } catch (const Error& err) {
            throw ConfigError(err.what());
        }
        m.sources.push_back(s);
    }
    return m;
}

Json to_json(const GaussianScene& s) {
    Json gs = Json::array();
    for (const auto& g : s.gaussians) {
        gs.push_back({{"mean", vec(g.mean)},
                      {"quat_wxyz", Json::array({g.quat[0], g.quat[1], g.quat[2], g.quat[3]})},
                      {"log_scale", vec(g.log_scale)},
                      {"alpha_logit", g.alpha_logit},
                      {"eta_logit", g.eta_logit},
                      {"sh", Json(std::vector<double>(g.sh.begin(), g.sh.end()))}});
    }
    return Json{{"format", kCheckpointFormat},
                {"log_transmit_scale", s.log_transmit_scale},
                {"s_max", s.s_max},
                {"gaussians", gs}};
}

GaussianScene scene_from_json(const Json& j) {
    check_keys(j, {"format", "log_transmit_scale", "s_max", "gaussians"}, "checkpoint");
    if (!j.contains("format") || j.at("format") != kCheckpointFormat) {
        throw ConfigError(std::string("checkpoint: missing or unsupported format tag (expected ") + kCheckpointFormat + ")");
    }
    GaussianScene s;
    take(j, "log_transmit_scale", s.log_transmit_scale);
    take(j, "s_max", s.s_max);
    if (j.contains("gaussians")) {
        for (const auto& e : j.at("gaussians")) {
            check_keys(e, {"mean", "quat_wxyz", "log_scale", "alpha_logit", "eta_logit", "sh"}, "checkpoint.gaussians");
            Gaussian g;
            g.mean = vec3(e.at("mean"));
            const Json& q = e.at("quat_wxyz");
            if (!q.is_array() || q.size() != 4) throw ConfigError("checkpoint: quat_wxyz needs 4 numbers");
            for (int k = 0; k < 4; ++k) g.quat[k] = q[static_cast<std::size_t>(k)].get<double>();
            g.log_scale = vec3(e.at("log_scale"));
            g.alpha_logit = e.at("alpha_logit").get<double>();
            g.eta_logit = e.at("eta_logit").get<double>();
            const Json& sh = e.at("sh");
            if (!sh.is_array() || sh.size() != static_cast<std::size_t>(kShCount)) {
                throw ConfigError("checkpoint: sh needs " + std::to_string(kShCount) + " coefficients");
            }
            for (std::size_t k = 0; k < sh.size(); ++k) g.sh[k] = sh[k].get<double>();
            s.gaussians.push_back(g);
        }
    }
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return s;
}

void save_checkpoint(const fs::path& path, const GaussianScene& s) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_json(path, to_json(s));
}

GaussianScene load_checkpoint(const fs::path& path) { return scene_from_json(read_json(path)); }

Json to_json(const SceneSpec& s) {
    Json pts = Json::array(), walls = Json::array();
    for (const auto& p : s.points) pts.push_back({{"position", vec(p.position)}, {"rcs", p.rcs}});
    for (const auto& w : s.walls) {
        walls.push_back({{"a", vec(w.a)}, {"b", vec(w.b)}, {"rcs_per_meter", w.rcs_per_meter}, {"z_min", w.z_min}, {"z_max", w.z_max}});
    }
    return Json{{"points", pts}, {"walls", walls}};
}

SceneSpec scene_spec_from_json(const Json& j) {
    check_keys(j, {"points", "walls"}, "scene");
    SceneSpec s;
    if (j.contains("points")) {
        for (const auto& e : j.at("points")) {
            check_keys(e, {"position", "rcs"}, "scene.points");
            PointScatterer p;
            p.position = vec3(e.at("position"));
            take(e, "rcs", p.rcs);
            s.points.push_back(p);
        }
    }
    if (j.contains("walls")) {
        for (const auto& e : j.at("walls")) {
            check_keys(e, {"a", "b", "rcs_per_meter", "z_min", "z_max"}, "scene.walls");
            WallSegment w;
            w.a = vec2(e.at("a"));
            w.b = vec2(e.at("b"));
            take(e, "rcs_per_meter", w.rcs_per_meter);
            take(e, "z_min", w.z_min);
            take(e, "z_max", w.z_max);
            s.walls.push_back(w);
        }
    }
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return s;
}

Image polar_to_cartesian(const Image& polar, const RadarConfig& cfg, std::size_t size) {
    if (polar.rows() != static_cast<Eigen::Index>(cfg.n_azimuth) || polar.cols() != static_cast<Eigen::Index>(cfg.n_range)) {
        throw DimensionMismatch("polar_to_cartesian: image does not match the radar configuration");
    }
    if (size == 0) {
        throw InvalidArgument("polar_to_cartesian: size must be positive");
    }
    const double extent = static_cast<double>(cfg.n_range) * cfg.range_resolution;
    const double px = 2.0 * extent / static_cast<double>(size);
    const auto n = static_cast<Eigen::Index>(size);
    Image out = Image::Zero(n, n);
    for (Eigen::Index row = 0; row < n; ++row) {
        const double y = extent - (static_cast<double>(row) + 0.5) * px;
        for (Eigen::Index col = 0; col < n; ++col) {
            const double x = -extent + (static_cast<double>(col) + 0.5) * px;
            const double r = std::hypot(x, y);
            const auto bin = static_cast<Eigen::Index>(std::floor(r / cfg.range_resolution));
            if (bin >= polar.cols()) continue;
            out(row, col) = polar(static_cast<Eigen::Index>(azimuth_to_beam(std::atan2(y, x), cfg)), bin);
        }
    }
    return out;
}

void save_occupancy(const fs::path& png, const OccupancyGrid& g) {
    g.validate();
    if (png.has_parent_path()) fs::create_directories(png.parent_path());
    write_png8(png, g.binary.cast<double>());
    write_json(sidecar(png), Json{{"origin", vec(g.origin)},
                                  {"cell_size", g.cell_size},
                                  {"p_th", g.p_th},
                                  {"width", g.width()},
                                  {"height", g.height()},
                                  {"occupied", g.occupied()}});
}

OccupancyGrid load_occupancy(const fs::path& png) {
    const Json meta = read_json(sidecar(png));
    check_keys(meta, {"origin", "cell_size", "p_th", "width", "height", "occupied"}, "occupancy");
    OccupancyGrid g;
    g.origin = vec2(meta.at("origin"));
    take(meta, "cell_size", g.cell_size);
    take(meta, "p_th", g.p_th);
    const Image b = read_png(png);
    g.binary = (b.array() > 0.5).cast<int>().matrix();
    g.mean_power = b;
    g.counts = Eigen::MatrixXi::Zero(b.rows(), b.cols());
    g.validate();
    return g;
}

}  // namespace polarsplat
