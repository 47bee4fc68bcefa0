#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <vector>

#include "polarsplat/core.hpp"

namespace polarsplat {

struct NoiseThresholds {
    double constant_ratio = 0.21;            // C_th, saturation
    double multipath_constant_ratio = 0.2;   // C'_th, relaxed gate for multipath
    double peak_magnitude = 0.3;             // A_th, on |X[k_m]| / sqrt(N)
};

/// |X[k_m]| is compared against A_th after dividing by this factor
/// (orthonormal DFT scaling).
double peak_normalization(std::size_t n_bins);

struct MultipathRecord {
    std::size_t azimuth = 0;
    std::size_t k_m = 0;
    double magnitude = 0.0;  // raw |X[k_m]|
    double phase = 0.0;      // arg X[k_m]
};

struct NoiseReport {
    std::set<std::size_t> saturated;
    std::vector<MultipathRecord> multipath;
    NoiseThresholds thresholds;

    bool empty() const { return saturated.empty() && multipath.empty(); }
    /// Union of saturated and multipath beams.
    std::set<std::size_t> noisy_beams() const;
    bool is_multipath(std::size_t azimuth) const;
};

/// Classifies every beam of the frame independently. A beam can be both
/// saturated and multipath.
NoiseReport detect_noise(const RadarFrame& frame, const NoiseThresholds& thresholds = {});

/// Inclusive bin interval retained around a beam's dominant return.
struct DecayRegion {
    std::size_t start = 0;
    std::size_t end = 0;

    bool contains(std::size_t n) const { return n >= start && n <= end; }
};

inline constexpr double kDefaultDenoiseSigma = 5.0;

/// Smooths the beam, then walks downhill from the smoothed maximum in both
/// directions while neighbours do not increase.
DecayRegion decay_region(std::span<const double> beam, double sigma_bins = kDefaultDenoiseSigma);

/// Zeroes raw bins outside the decay region of every noisy beam. Other beams
/// are copied untouched.
RadarFrame denoise_frame(const RadarFrame& frame, const NoiseReport& report,
                         double sigma_bins = kDefaultDenoiseSigma);

}  // namespace polarsplat
