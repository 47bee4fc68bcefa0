#include "polarsplat/multipath.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace polarsplat {

void MultipathSource::validate() const {
    if (!(amplitude >= 0.0) || !(gamma >= 0.0) || !(r_view > 0.0)) {
        throw InvalidArgument("MultipathSource: need A >= 0, gamma >= 0 and r_view > 0");
    }
    if (k_m == 0 || n_bins < 2 || k_m >= n_bins) {
        throw InvalidArgument("MultipathSource: need 0 < k_m < N");
    }
}

double source_distance(std::size_t k_m, const RadarConfig& cfg) {
    if (k_m == 0) {
        throw ZeroFrequency("source_distance: k_m = 0 has no period");
    }
    const double f = static_cast<double>(k_m) / (static_cast<double>(cfg.n_range) * cfg.range_resolution);
    return 1.0 / f;
}

std::vector<double> reconstruct_component(std::size_t k_m, double magnitude, double phase, std::size_t n_bins) {
    if (k_m == 0 || k_m >= n_bins) {
        throw InvalidArgument("reconstruct_component: need 0 < k_m < N");
    }
    std::vector<double> x(n_bins);
    const double nn = static_cast<double>(n_bins);
    for (std::size_t n = 0; n < n_bins; ++n) {
        // k n mod N keeps the argument small for long beams
        const double arg = kTwoPi * static_cast<double>((k_m * n) % n_bins) / nn + phase;
        x[n] = magnitude / nn * std::cos(arg);
    }
    return x;
}

AttenuationFit fit_attenuation(std::span<const double> raw, std::span<const double> component, std::size_t first) {
    if (raw.size() != component.size()) {
        throw DimensionMismatch("fit_attenuation: raw and component lengths differ");
    }
    const std::size_t n = raw.size();
    if (std::all_of(raw.begin(), raw.end(), [](double v) { return v == 0.0; })) {
        return {};
    }
    double c_max = 0.0;
    for (std::size_t i = first; i < n; ++i) c_max = std::max(c_max, component[i]);
    if (!(c_max > 0.0)) {
        throw DegenerateFit("fit_attenuation: component has no positive crest");
    }

    std::vector<double> xs, ys;
    for (std::size_t i = std::max<std::size_t>(first, 1); i + 1 < n; ++i) {
        const double c = component[i];
        if (c < 0.5 * c_max || c < component[i - 1] || !(c > component[i + 1])) continue;
        const double ratio = raw[i] / c;
        if (ratio > 0.0) {
            xs.push_back(static_cast<double>(i));
            ys.push_back(std::log(ratio));
        }
    }
    if (xs.size() < 2) {
        throw DegenerateFit("fit_attenuation: fewer than 2 usable envelope peaks");
    }
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double den = m * sxx - sx * sx;
    if (!(den > 0.0)) {
        throw DegenerateFit("fit_attenuation: envelope peaks are not distinct");
    }
    const double slope = (m * sxy - sx * sy) / den;
    double a = std::exp((sy - slope * sx) / m);
    double g = -slope;

    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (std::size_t i = first; i < n; ++i) {
        const double c = component[i];
        if (!(c > 0.0)) continue;
        const double e = std::exp(-g * static_cast<double>(i)) * c;
        const double r = raw[i] - a * e;
        const Eigen::Vector2d j(e, -static_cast<double>(i) * a * e);
        jtj += j * j.transpose();
        jtr += j * r;
    }
    if (std::abs(jtj.determinant()) > 1e-300) {
        const Eigen::Vector2d step = jtj.ldlt().solve(jtr);
        if (step.allFinite()) {
            a += step[0];
            g += step[1];
        }
    }
    return {std::max(a, 0.0), std::max(g, 0.0)};
}

namespace {

bool try_merge(MultipathSourceMap& map, const MultipathSource& s, const SourceMapOptions& opt) {
    for (auto& e : map.sources) {
        if ((e.position - s.position).norm() >= opt.merge_radius ||
            std::abs(wrap_angle(e.theta_view - s.theta_view)) >= opt.merge_angle) {
            continue;
        }
        const double w = static_cast<double>(e.merged);
        const double t = 1.0 / (w + 1.0);
        auto avg = [t](double a, double b) { return a + t * (b - a); };
        auto avg_angle = [t](double a, double b) { return wrap_angle(a + t * wrap_angle(b - a)); };
        e.position += t * (s.position - e.position);
        e.theta_view = avg_angle(e.theta_view, s.theta_view);
        e.r_view = avg(e.r_view, s.r_view);
        e.amplitude = avg(e.amplitude, s.amplitude);
        e.gamma = avg(e.gamma, s.gamma);
        e.magnitude = avg(e.magnitude, s.magnitude);
        e.phase = avg_angle(e.phase, s.phase);
        e.k_m = static_cast<std::size_t>(std::lround(avg(static_cast<double>(e.k_m), static_cast<double>(s.k_m))));
        e.merged += 1;
        return true;
    }
    return false;
}

}  // namespace

MultipathSourceMap build_source_map(const std::vector<RadarFrame>& frames, const std::vector<NoiseReport>& reports,
                                    const SourceMapOptions& options, SourceMapStats* stats) {
    if (frames.size() != reports.size()) {
        throw DimensionMismatch("build_source_map: " + std::to_string(frames.size()) + " frames but " +
                                std::to_string(reports.size()) + " reports");
    }
    SourceMapStats st;
    MultipathSourceMap map;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const RadarFrame& frame = frames[f];
        const auto n_bins = static_cast<std::size_t>(frame.power.cols());
        const std::size_t first_valid = frame.config.first_valid_bin();
        for (const auto& rec : reports[f].multipath) {
            ++st.detections;
            if (rec.azimuth >= static_cast<std::size_t>(frame.power.rows()) || rec.k_m == 0 || rec.k_m >= n_bins) {
                ++st.skipped;
                continue;
            }
            const auto h = static_cast<Eigen::Index>(rec.azimuth);
            const std::span<const double> beam(frame.power.row(h).data(), n_bins);
            const DecayRegion region = decay_region(beam, options.sigma_bins);

            std::size_t src = n_bins;
            double best = 0.0;
            for (std::size_t n = std::max(region.start, first_valid); n <= region.end; ++n) {
                if (beam[n] > best) {
                    best = beam[n];
                    src = n;
                }
            }
            if (src >= n_bins) {
                ++st.skipped;
                continue;
            }

            const std::size_t tail_len = n_bins - src;
            const double phase_rel =
                wrap_angle(rec.phase + kTwoPi * static_cast<double>((rec.k_m * src) % n_bins) / static_cast<double>(n_bins));
            const auto full = reconstruct_component(rec.k_m, rec.magnitude, phase_rel, n_bins);
            const std::span<const double> component(full.data(), tail_len);
            const std::size_t fit_from = region.end + 1 - src;
            if (fit_from + 2 >= tail_len) {
                ++st.skipped;
                continue;
            }
            const double baseline = *std::min_element(beam.begin() + static_cast<long>(region.end + 1), beam.end());
            std::vector<double> tail(tail_len);
            for (std::size_t m = 0; m < tail_len; ++m) tail[m] = beam[src + m] - baseline;

            AttenuationFit fit;
            try {
                fit = fit_attenuation(tail, component, fit_from);
            } catch (const DegenerateFit&) {
                ++st.skipped;
                continue;
            }

            MultipathSource s;
            const double r = bin_to_range(src, frame.config);
            const double th = beam_azimuth(rec.azimuth, frame.config);
            s.position = frame.pose.to_world(Eigen::Vector3d(r * std::cos(th), r * std::sin(th), 0.0));
            const Eigen::Vector2d d = (s.position - frame.pose.translation).head<2>();
            s.theta_view = std::atan2(d.y(), d.x());
            s.r_view = d.norm();
            s.amplitude = fit.amplitude;
            s.gamma = fit.gamma;
            s.k_m = rec.k_m;
            s.magnitude = rec.magnitude;
            s.phase = phase_rel;
            s.n_bins = n_bins;
            if (!(s.r_view > 0.0)) {
                ++st.skipped;
                continue;
            }
            if (try_merge(map, s, options)) {
                ++st.merged;
            } else {
                map.sources.push_back(s);
            }
        }
    }
    if (stats) *stats = st;
    return map;
}

Image render_multipath_raw(const MultipathSourceMap& map, const Pose& pose, const RadarConfig& cfg,
                           const MultipathRenderOptions& options) {
    if (!(options.r_th > 0.0 && options.theta_th > 0.0)) {
        throw InvalidArgument("render_multipath: r_th and theta_th must be positive");
    }
    const auto n_bins = cfg.n_range;
    Image out = Image::Zero(static_cast<Eigen::Index>(cfg.n_azimuth), static_cast<Eigen::Index>(n_bins));
    for (const auto& s : map.sources) {
        const Eigen::Vector2d d = (s.position - pose.translation).head<2>();
        const double r_new = d.norm();
        if (!(r_new > 0.0)) continue;
        const double dr_view = std::abs(r_new - s.r_view);
        const double dth_view = std::abs(wrap_angle(std::atan2(d.y(), d.x()) - s.theta_view));
        if (!(dr_view < options.r_th && dth_view < options.theta_th)) continue;

        const auto src = static_cast<std::size_t>(std::floor(r_new / cfg.range_resolution));
        if (src >= n_bins || s.k_m == 0) continue;
        // the ghost period follows the source range: unchanged k_m at the capture pose
        const double period = source_distance(s.k_m, cfg) * r_new / s.r_view;
        const auto k = static_cast<long>(std::lround(static_cast<double>(n_bins) * cfg.range_resolution / period));
        if (k < 1) continue;

        const Eigen::Vector3d p = pose.to_sensor(s.position);
        const auto h = static_cast<Eigen::Index>(azimuth_to_beam(std::atan2(p.y(), p.x()), cfg));
        const double nn = static_cast<double>(n_bins);
        // the stored magnitude was taken on an N_src-bin beam; keep the component amplitude
        const double amp = s.magnitude / static_cast<double>(s.n_bins ? s.n_bins : n_bins);
        for (std::size_t n = src; n < n_bins; ++n) {
            const auto m = n - src;
            const double arg = kTwoPi * static_cast<double>((static_cast<std::size_t>(k) * m) % n_bins) / nn + s.phase;
            out(h, static_cast<Eigen::Index>(n)) +=
                s.amplitude * std::exp(-s.gamma * static_cast<double>(m)) * amp * std::cos(arg);
        }
    }
    return out;
}

Image render_multipath(const MultipathSourceMap& map, const Pose& pose, const RadarConfig& cfg,
                       const MultipathRenderOptions& options) {
    return render_multipath_raw(map, pose, cfg, options).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace polarsplat
