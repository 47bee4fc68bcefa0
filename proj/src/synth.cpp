#include "polarsplat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "polarsplat/spectral.hpp"

namespace polarsplat {
namespace {

void check_beam(const RadarFrame& frame, std::size_t beam) {
    if (beam >= static_cast<std::size_t>(frame.power.rows())) {
        throw BadBeamIndex("beam " + std::to_string(beam) + " outside frame with " +
                           std::to_string(frame.power.rows()) + " beams");
    }
}

}  // namespace

void SceneSpec::validate() const {
    for (const auto& p : points) {
        if (!(p.rcs >= 0.0) || !p.position.allFinite()) {
            throw InvalidArgument("SceneSpec: point scatterer needs finite position and rcs >= 0");
        }
    }
    for (const auto& w : walls) {
        if (!(w.rcs_per_meter >= 0.0)) {
            throw InvalidArgument("SceneSpec: wall rcs density must be >= 0");
        }
        if (!(w.length() > 0.0)) {
            throw InvalidArgument("SceneSpec: wall endpoints must be distinct");
        }
        if (!(w.z_max >= w.z_min)) {
            throw InvalidArgument("SceneSpec: wall z_max must be >= z_min");
        }
    }
}

std::vector<ReflectorSample> scene_samples(const SceneSpec& spec, double spacing) {
    if (!(spacing > 0.0)) {
        throw InvalidArgument("scene_samples: spacing must be positive");
    }
    spec.validate();
    std::vector<ReflectorSample> out;
    for (const auto& p : spec.points) {
        out.push_back({p.position, p.rcs});
    }
    for (const auto& w : spec.walls) {
        const double len = w.length();
        const auto n_len = static_cast<std::size_t>(std::ceil(len / spacing));
        const double dl = len / static_cast<double>(n_len);
        const double height = w.z_max - w.z_min;
        const auto n_z = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(height / spacing)));
        const double rcs = w.rcs_per_meter * dl / static_cast<double>(n_z);
        for (std::size_t i = 0; i < n_len; ++i) {
            const Eigen::Vector2d xy = w.a + (w.b - w.a) * ((static_cast<double>(i) + 0.5) / static_cast<double>(n_len));
            for (std::size_t k = 0; k < n_z; ++k) {
                const double z = n_z == 1 ? 0.5 * (w.z_min + w.z_max)
                                          : w.z_min + height * (static_cast<double>(k) + 0.5) / static_cast<double>(n_z);
                out.push_back({Eigen::Vector3d(xy.x(), xy.y(), z), rcs});
            }
        }
    }
    return out;
}

std::vector<Eigen::Vector2d> scene_ground_truth(const SceneSpec& spec, double spacing) {
    if (!(spacing > 0.0)) {
        throw InvalidArgument("scene_ground_truth: spacing must be positive");
    }
    std::vector<Eigen::Vector2d> out;
    for (const auto& p : spec.points) {
        out.push_back(p.position.head<2>());
    }
    for (const auto& w : spec.walls) {
        const auto n = static_cast<std::size_t>(std::ceil(w.length() / spacing));
        for (std::size_t i = 0; i <= n; ++i) {
            out.push_back(w.a + (w.b - w.a) * (static_cast<double>(i) / static_cast<double>(n)));
        }
    }
    return out;
}

Image simulate_power(const SceneSpec& spec, const Pose& pose, const RadarConfig& cfg, const AntennaGains& gains) {
    cfg.validate();
    pose.validate();
    const auto rows = static_cast<long>(cfg.n_azimuth);
    const auto cols = static_cast<long>(cfg.n_range);
    Image deposit = Image::Zero(rows, cols);
    const double step = cfg.azimuth_step_rad();
    const double reach = std::max(3.0 * gains.azimuth_sigma(), gains.beam_spread());
    const long half_beams = static_cast<long>(std::ceil(reach / step));

    for (const auto& s : scene_samples(spec, 0.5 * cfg.range_resolution)) {
        if (s.rcs == 0.0) continue;
        const SphericalPoint sp = cart_to_spherical(pose.to_sensor(s.position));
        if (sp.r <= 0.0) continue;
        const auto n = static_cast<long>(std::floor(sp.r / cfg.range_resolution));
        if (n >= cols) continue;
        const double g_el = gains.elevation(sp.phi);
        const double base = cfg.transmit_scale * g_el * g_el * s.rcs / std::pow(sp.r, 4);
        if (base == 0.0) continue;
        const long h0 = std::lround(sp.theta / step);
        for (long dh = -half_beams; dh <= half_beams; ++dh) {
            const long h = h0 + dh;
            const double g_az = gains.azimuth(static_cast<double>(h) * step - sp.theta);
            const long row = ((h % rows) + rows) % rows;
            deposit(row, n) += base * g_az * g_az;
        }
    }

    const LeakageKernel lk = leakage_kernel(cfg);
    Image out(rows, cols);
    for (long h = 0; h < rows; ++h) {
        convolve_reflect(std::span<const double>(deposit.row(h).data(), static_cast<std::size_t>(cols)), lk.taps,
                         std::span<double>(out.row(h).data(), static_cast<std::size_t>(cols)));
    }
    return out;
}

RadarFrame simulate_frame(const SceneSpec& spec, const Pose& pose, const RadarConfig& cfg,
                          const AntennaGains& gains, double timestamp) {
    RadarFrame f;
    f.config = cfg;
    f.pose = pose;
    f.timestamp = timestamp;
    f.power = simulate_power(spec, pose, cfg, gains).cwiseMax(0.0).cwiseMin(1.0);
    return f;
}

RadarFrame simulate_frame(const SceneSpec& spec, const Pose& pose, const RadarConfig& cfg) {
    return simulate_frame(spec, pose, cfg, AntennaGains(cfg));
}

RadarFrame inject_saturation(const RadarFrame& frame, const std::vector<std::size_t>& beams, double offset) {
    if (!(offset >= 0.0 && offset <= 1.0)) {
        throw InvalidArgument("inject_saturation: offset must lie in [0, 1]");
    }
    for (std::size_t b : beams) check_beam(frame, b);
    RadarFrame out = frame;
    if (offset == 0.0) return out;
    for (std::size_t b : beams) {
        auto row = out.power.row(static_cast<Eigen::Index>(b));
        row = (row.array() + offset).min(1.0);
    }
    return out;
}

RadarFrame inject_multipath(const RadarFrame& frame, std::size_t beam, std::size_t source_bin,
                            double period_m, double amplitude, double gamma) {
    check_beam(frame, beam);
    const double dr = frame.config.range_resolution;
    if (!(period_m > 2.0 * dr)) {
        throw InvalidArgument("inject_multipath: period must exceed two range bins");
    }
    if (!(amplitude >= 0.0 && amplitude <= 1.0) || !(gamma >= 0.0)) {
        throw InvalidArgument("inject_multipath: need amplitude in [0, 1] and gamma >= 0");
    }
    const auto cols = static_cast<std::size_t>(frame.power.cols());
    if (source_bin >= cols) {
        throw OutOfRange("inject_multipath: source bin " + std::to_string(source_bin) + " beyond range");
    }
    RadarFrame out = frame;
    const auto h = static_cast<Eigen::Index>(beam);
    const double src = frame.power(h, static_cast<Eigen::Index>(source_bin));
    if (amplitude == 0.0 || src == 0.0) return out;
    for (std::size_t n = source_bin; n < cols; ++n) {
        const double m = static_cast<double>(n - source_bin);
        const double tail = amplitude * std::exp(-gamma * m) * std::max(std::cos(kTwoPi * m * dr / period_m), 0.0) * src;
        double& v = out.power(h, static_cast<Eigen::Index>(n));
        v = std::min(1.0, v + tail);
    }
    return out;
}

RadarFrame inject_speckle(const RadarFrame& frame, double level, std::uint64_t seed) {
    if (!(level >= 0.0 && level <= 0.2)) {
        throw InvalidArgument("inject_speckle: level must lie in [0, 0.2]");
    }
    RadarFrame out = frame;
    if (level == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> dist(1.0 / level);
    for (Eigen::Index h = 0; h < out.power.rows(); ++h) {
        for (Eigen::Index n = 0; n < out.power.cols(); ++n) {
            out.power(h, n) = std::min(1.0, out.power(h, n) + dist(rng));
        }
    }
    return out;
}

void InjectionConfig::validate(const RadarConfig& cfg) const {
    if (saturated_beams + multipath_beams > cfg.n_azimuth) {
        throw InvalidArgument("InjectionConfig: more noisy beams than beams");
    }
    if (!(saturation_offset >= 0.0 && saturation_offset <= 1.0)) {
        throw InvalidArgument("InjectionConfig: saturation_offset must lie in [0, 1]");
    }
    if (!(multipath_period > 0.0 && multipath_amplitude >= 0.0 && multipath_gamma >= 0.0)) {
        throw InvalidArgument("InjectionConfig: multipath period must be positive, amplitude and gamma nonnegative");
    }
    if (!(speckle >= 0.0 && speckle <= 0.2)) {
        throw InvalidArgument("InjectionConfig: speckle must lie in [0, 0.2]");
    }
}

RadarFrame inject_noise(const RadarFrame& clean, const InjectionConfig& config, std::uint64_t seed,
                        InjectionRecord* record) {
    config.validate(clean.config);
    InjectionRecord rec;
    if (!config.enabled) {
        if (record) *record = rec;
        return clean;
    }
    std::mt19937_64 rng(seed);
    const auto rows = static_cast<std::size_t>(clean.power.rows());
    std::vector<std::size_t> bright, rest;
    for (std::size_t h = 0; h < rows; ++h) {
        (clean.power.row(static_cast<Eigen::Index>(h)).maxCoeff() >= 0.2 ? bright : rest).push_back(h);
    }
    std::shuffle(bright.begin(), bright.end(), rng);
    const std::size_t n_mp = std::min(config.multipath_beams, bright.size());
    rest.insert(rest.end(), bright.begin() + static_cast<std::ptrdiff_t>(n_mp), bright.end());
    std::shuffle(rest.begin(), rest.end(), rng);

    RadarFrame out = clean;
    for (std::size_t i = 0; i < n_mp; ++i) {
        const std::size_t beam = bright[i];
        Eigen::Index src = 0;
        clean.power.row(static_cast<Eigen::Index>(beam)).maxCoeff(&src);
        out = inject_multipath(out, beam, static_cast<std::size_t>(src), config.multipath_period,
                               config.multipath_amplitude, config.multipath_gamma);
        rec.multipath.push_back(beam);
        rec.multipath_bins.push_back(static_cast<std::size_t>(src));
        rec.saturated.push_back(beam);
    }
    rec.saturated.insert(rec.saturated.end(), rest.begin(),
                         rest.begin() + static_cast<std::ptrdiff_t>(std::min(config.saturated_beams, rest.size())));
    out = inject_saturation(out, rec.saturated, config.saturation_offset);
    out = inject_speckle(out, config.speckle, seed ^ 0x9e3779b97f4a7c15ULL);
    std::sort(rec.saturated.begin(), rec.saturated.end());
    if (record) *record = rec;
    return out;
}

SceneSpec three_wall_scene(double rcs_per_meter) {
    SceneSpec s;
    s.walls.push_back({{-10.0, 4.0}, {8.0, 4.0}, rcs_per_meter, -1.0, 1.5});
    s.walls.push_back({{-10.0, -4.0}, {8.0, -4.0}, rcs_per_meter, -1.0, 1.5});
    s.walls.push_back({{8.0, -4.0}, {8.0, 4.0}, rcs_per_meter, -1.0, 1.5});
    return s;
}

std::vector<Pose> line_trajectory(const Eigen::Vector2d& a, const Eigen::Vector2d& b, std::size_t n,
                                  double yaw_offset) {
    if (n == 0) {
        throw InvalidArgument("line_trajectory: need at least one pose");
    }
    const Eigen::Vector2d d = b - a;
    const double yaw = (d.norm() > 0.0 ? std::atan2(d.y(), d.x()) : 0.0) + yaw_offset;
    std::vector<Pose> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        const Eigen::Vector2d p = a + t * d;
        out.push_back(Pose::from_xy_yaw(p.x(), p.y(), yaw));
    }
    return out;
}

std::vector<Pose> arc_trajectory(const Eigen::Vector2d& center, double radius, double start, double end,
                                 std::size_t n) {
    if (n == 0 || !(radius > 0.0)) {
        throw InvalidArgument("arc_trajectory: need n >= 1 and radius > 0");
    }
    std::vector<Pose> out;
    const double dir = end >= start ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        const double a = start + t * (end - start);
        out.push_back(Pose::from_xy_yaw(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a),
                                        a + dir * kPi / 2));
    }
    return out;
}

}  // namespace polarsplat
