#include "polarsplat/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polarsplat/spectral.hpp"

namespace polarsplat {

double peak_normalization(std::size_t n_bins) {
    return std::sqrt(static_cast<double>(n_bins));
}

std::set<std::size_t> NoiseReport::noisy_beams() const {
    std::set<std::size_t> out = saturated;
    for (const auto& m : multipath) {
        out.insert(m.azimuth);
    }
    return out;
}

bool NoiseReport::is_multipath(std::size_t azimuth) const {
    return std::any_of(multipath.begin(), multipath.end(),
                       [azimuth](const MultipathRecord& m) { return m.azimuth == azimuth; });
}

NoiseReport detect_noise(const RadarFrame& frame, const NoiseThresholds& thresholds) {
    if (!(thresholds.constant_ratio > 0.0 && thresholds.multipath_constant_ratio > 0.0 &&
          thresholds.peak_magnitude > 0.0)) {
        throw InvalidArgument("detect_noise: thresholds must be positive");
    }
    frame.validate();
    NoiseReport report;
    report.thresholds = thresholds;
    const auto n_bins = static_cast<std::size_t>(frame.power.cols());
    const double norm = peak_normalization(n_bins);
    for (Eigen::Index h = 0; h < frame.power.rows(); ++h) {
        const std::span<const double> beam(frame.power.row(h).data(), n_bins);
        const BeamSpectrum spec = range_fft(beam);
        const double c = constant_ratio(spec);
        const auto az = static_cast<std::size_t>(h);
        if (c > thresholds.constant_ratio) {
            report.saturated.insert(az);
        }
        if (c > thresholds.multipath_constant_ratio) {
            const SpectralPeak peak = peak_component(spec);
            if (peak.magnitude / norm > thresholds.peak_magnitude) {
                report.multipath.push_back({az, peak.k, peak.magnitude, peak.phase});
            }
        }
    }
    return report;
}

DecayRegion decay_region(std::span<const double> beam, double sigma_bins) {
    if (beam.size() < 2) {
        throw EmptyBeam("decay_region needs at least 2 bins");
    }
    const std::vector<double> smooth = gaussian_smooth(beam, sigma_bins);
    const auto n_max = static_cast<std::size_t>(std::distance(smooth.begin(), std::max_element(smooth.begin(), smooth.end())));
    std::size_t start = n_max;
    while (start > 0 && smooth[start - 1] <= smooth[start]) {
        --start;
    }
    std::size_t end = n_max;
    while (end < smooth.size() - 1 && smooth[end + 1] <= smooth[end]) {
        ++end;
    }
    return {start, end};
}

RadarFrame denoise_frame(const RadarFrame& frame, const NoiseReport& report, double sigma_bins) {
    RadarFrame out = frame;
    const auto rows = static_cast<std::size_t>(frame.power.rows());
    const auto cols = static_cast<std::size_t>(frame.power.cols());
    for (std::size_t az : report.noisy_beams()) {
        if (az >= rows) {
            throw DimensionMismatch("denoise_frame: report beam " + std::to_string(az) +
                                    " outside frame with " + std::to_string(rows) + " beams");
        }
        const auto h = static_cast<Eigen::Index>(az);
        const DecayRegion region = decay_region(std::span<const double>(frame.power.row(h).data(), cols), sigma_bins);
        for (std::size_t n = 0; n < cols; ++n) {
            if (!region.contains(n)) {
                out.power(h, static_cast<Eigen::Index>(n)) = 0.0;
            }
        }
    }
    return out;
}

}  // namespace polarsplat
