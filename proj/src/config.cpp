#include "polarsplat/config.hpp"

#include <variant>

namespace polarsplat {
namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>);

struct Degrees {
    double* rad;
};

using Field = std::variant<double*, std::size_t*, bool*, std::string*, Eigen::Vector2d*, Degrees>;

struct Entry {
    const char* key;
    Field field;
};

struct Section {
    const char* key;
    std::vector<Entry> entries;
    std::vector<Section> children;
};

Section layout(RunConfig& c) {
    TrainConfig& t = c.fit.train;
    SceneInitOptions& in = c.fit.init;
    TrajectoryConfig& tr = c.synth.trajectory;
    InjectionConfig& nz = c.synth.noise;
    return Section{
        "",
        {{"seed", &c.seed}},
        {
            {"noise",
             {{"constant_ratio", &c.noise.constant_ratio},
              {"multipath_constant_ratio", &c.noise.multipath_constant_ratio},
              {"peak_magnitude", &c.noise.peak_magnitude},
              {"denoise_sigma", &c.denoise_sigma}},
             {}},
            {"source_map", {{"merge_radius", &c.source_map.merge_radius}, {"merge_angle_deg", Degrees{&c.source_map.merge_angle}}}, {}},
            {"multipath", {{"r_th", &c.multipath.r_th}, {"theta_th_deg", Degrees{&c.multipath.theta_th}}}, {}},
            {"occupancy",
             {{"window", &c.occupancy.window}, {"p_th", &c.occupancy.options.p_th}, {"cell_size", &c.occupancy.options.cell_size}},
             {}},
            {"render", {{"q", &c.render.q}, {"cutoff_sigma", &c.render.cutoff_sigma}, {"threads", &c.render.threads}}, {}},
            {"init",
             {{"count", &in.count},
              {"size", &in.size},
              {"alpha", &in.alpha},
              {"eta", &in.eta},
              {"a0", &in.a0},
              {"radius", &in.radius},
              {"min_radius", &in.min_radius},
              {"z_min", &in.z_min},
              {"z_max", &in.z_max}},
             {}},
            {"train",
             {{"iterations", &t.iterations},
              {"scene_extent", &t.scene_extent},
              {"s_max", &t.s_max},
              {"compose_multipath", &t.compose_multipath},
              {"prune", &t.prune},
              {"prune_every", &t.prune_every},
              {"prune_threshold", &t.prune_threshold},
              {"checkpoint_every", &t.checkpoint_every},
              {"holdout_every", &c.fit.holdout_every},
              {"log_every", &c.fit.log_every}},
             {{"lr",
               {{"mean", &t.lr.mean},
                {"quat", &t.lr.quat},
                {"log_scale", &t.lr.log_scale},
                {"logit", &t.lr.logit},
                {"sh", &t.lr.sh},
                {"transmit", &t.lr.transmit}},
               {}},
              {"weights",
               {{"l1", &t.weights.l1},
                {"ssim", &t.weights.ssim},
                {"occ", &t.weights.occ},
                {"size", &t.weights.size},
                {"reg", &t.weights.reg}},
               {}}}},
            {"synth",
             {{"frame_interval", &c.synth.frame_interval}},
             {{"trajectory",
               {{"type", &tr.type},
                {"start", &tr.start},
                {"end", &tr.end},
                {"center", &tr.center},
                {"radius", &tr.radius},
                {"start_angle", &tr.start_angle},
                {"end_angle", &tr.end_angle},
                {"frames", &tr.frames}},
               {}},
              {"noise",
               {{"enabled", &nz.enabled},
                {"saturated_beams", &nz.saturated_beams},
                {"saturation_offset", &nz.saturation_offset},
                {"multipath_beams", &nz.multipath_beams},
                {"multipath_period", &nz.multipath_period},
                {"multipath_amplitude", &nz.multipath_amplitude},
                {"multipath_gamma", &nz.multipath_gamma},
                {"speckle", &nz.speckle}},
               {}}}},
            {"eval", {{"tau", &c.eval.tau}, {"gt_spacing", &c.eval.gt_spacing}}, {}},
        }};
}

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void read_field(const Json& v, const Field& f, const std::string& path) {
    try {
        std::visit(
            [&](auto p) {
                using P = decltype(p);
                if constexpr (std::is_same_v<P, Degrees>) {
                    *p.rad = deg2rad(v.get<double>());
                } else if constexpr (std::is_same_v<P, Eigen::Vector2d*>) {
                    if (!v.is_array() || v.size() != 2) throw ConfigError("expected [x, y]");
                    *p = Eigen::Vector2d(v[0].get<double>(), v[1].get<double>());
                } else if constexpr (std::is_same_v<P, std::size_t*>) {
                    if (!v.is_number_unsigned()) throw ConfigError("expected a nonnegative integer");
                    *p = v.get<std::size_t>();
                } else if constexpr (std::is_same_v<P, bool*>) {
                    if (!v.is_boolean()) throw ConfigError("expected true or false");
                    *p = v.get<bool>();
                } else if constexpr (std::is_same_v<P, std::string*>) {
                    if (!v.is_string()) throw ConfigError("expected a string");
                    *p = v.get<std::string>();
                } else {
                    if (!v.is_number()) throw ConfigError("expected a number");
                    *p = v.get<double>();
                }
            },
            f);
    } catch (const std::exception& e) {
        throw ConfigError("bad value for '" + path + "': " + e.what());
    }
}

Json write_field(const Field& f) {
    return std::visit(
        [](auto p) -> Json {
            using P = decltype(p);
            if constexpr (std::is_same_v<P, Degrees>) {
                return rad2deg(*p.rad);
            } else if constexpr (std::is_same_v<P, Eigen::Vector2d*>) {
                return Json::array({p->x(), p->y()});
            } else {
                return *p;
            }
        },
        f);
}

void read_section(const Json& j, const Section& s, const std::string& path) {
    if (!j.is_object()) {
        throw ConfigError("'" + (path.empty() ? std::string("config") : path) + "' must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        const std::string full = join(path, key);
        bool found = false;
        for (const auto& e : s.entries) {
            if (key == e.key) {
                read_field(value, e.field, full);
                found = true;
            }
        }
        for (const auto& child : s.children) {
            if (key == child.key) {
                read_section(value, child, full);
                found = true;
            }
        }
        if (!found) {
            throw ConfigError("unknown key '" + full + "'");
        }
    }
}

Json write_section(const Section& s) {
    Json out = Json::object();
    for (const auto& e : s.entries) out[e.key] = write_field(e.field);
    for (const auto& child : s.children) out[child.key] = write_section(child);
    return out;
}

}  // namespace

std::vector<Pose> TrajectoryConfig::poses() const {
    if (type == "line") return line_trajectory(start, end, frames);
    if (type == "arc") return arc_trajectory(center, radius, start_angle, end_angle, frames);
    throw ConfigError("synth.trajectory.type must be \"line\" or \"arc\", got \"" + type + "\"");
}

void RunConfig::validate() const {
    try {
        radar.validate();
        fit.train.weights.validate();
        fit.train.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(noise.constant_ratio > 0.0 && noise.multipath_constant_ratio > 0.0 && noise.peak_magnitude > 0.0,
            "noise thresholds must be positive");
    require(denoise_sigma > 0.0, "noise.denoise_sigma must be positive");
    require(occupancy.window >= 1, "occupancy.window must be at least 1");
    require(occupancy.options.p_th > 0.0 && occupancy.options.p_th < 1.0, "occupancy.p_th must lie in (0, 1)");
    require(occupancy.options.cell_size > 0.0, "occupancy.cell_size must be positive");
    require(render.q >= 1, "render.q must be at least 1");
    require(render.cutoff_sigma > 0.0, "render.cutoff_sigma must be positive");
    require(fit.init.count >= 1, "init.count must be at least 1");
    require(fit.init.radius > fit.init.min_radius && fit.init.min_radius >= 0.0, "init.radius must exceed init.min_radius");
    require(fit.init.z_max >= fit.init.z_min, "init.z_max must be at least init.z_min");
    require(synth.trajectory.frames >= 1, "synth.trajectory.frames must be at least 1");
    require(synth.trajectory.type == "line" || synth.trajectory.type == "arc",
            "synth.trajectory.type must be \"line\" or \"arc\"");
    require(synth.noise.saturated_beams + synth.noise.multipath_beams <= radar.n_azimuth,
            "synth.noise beam counts exceed the number of beams");
    require(synth.noise.speckle >= 0.0 && synth.noise.speckle <= 0.2, "synth.noise.speckle must lie in [0, 0.2]");
    require(eval.tau > 0.0 && eval.gt_spacing > 0.0, "eval.tau and eval.gt_spacing must be positive");
}

RunConfig run_config_from_json(const Json& j, RunConfig c) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    Json rest = j;
    if (j.contains("radar")) {
        c.radar = radar_config_from_json(j.at("radar"), c.radar);
        rest.erase("radar");
    }
    read_section(rest, layout(c), "");
    c.source_map.sigma_bins = c.denoise_sigma;
    c.fit.init.s_max = c.fit.train.s_max;
    c.fit.init.seed = c.seed;
    c.fit.train.seed = c.seed;
    c.validate();
    return c;
}

Json to_json(const RunConfig& c) {
    RunConfig copy = c;
    Json body = write_section(layout(copy));
    Json out = Json::object();
    out["radar"] = to_json(c.radar);
    for (const auto& [k, v] : body.items()) out[k] = v;
    return out;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(read_json(path)); }

}  // namespace polarsplat
