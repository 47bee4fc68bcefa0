#pragma once

#include <optional>
#include <vector>

#include "polarsplat/core.hpp"

namespace polarsplat {

/// Sampled gain profile, linearly interpolated and held constant past the ends.
struct GainTable {
    std::vector<double> angles;  // rad, strictly increasing
    std::vector<double> gains;

    void validate() const;
    double eval(double angle) const;
    double slope(double angle) const;
};

/// One-way antenna gain profiles. Defaults are analytic: a Gaussian azimuth
/// beam with -3 dB at +-beam_spread/2, and an elevation profile made of the
/// same main lobe plus a cosecant-squared fill-in that reaches down to -40 deg
/// and cuts off above the sensor plane. Both are normalized to 1 at boresight.
class AntennaGains {
public:
    AntennaGains() : AntennaGains(RadarConfig{}) {}
    explicit AntennaGains(const RadarConfig& cfg);

    double azimuth(double dtheta) const;
    double elevation(double phi) const;
    double elevation_derivative(double phi) const;

    /// Std of the azimuth main lobe, rad.
    double azimuth_sigma() const { return az_sigma_; }
    double beam_spread() const { return beam_spread_; }

    void set_azimuth_table(GainTable t);
    void set_elevation_table(GainTable t);

private:
    double elevation_raw(double phi, double* deriv) const;

    double beam_spread_;
    double az_sigma_;
    double el_sigma_;
    double fill_floor_;
    double el_norm_;
    std::optional<GainTable> az_table_;
    std::optional<GainTable> el_table_;
};

}  // namespace polarsplat
