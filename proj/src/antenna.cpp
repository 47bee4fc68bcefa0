#include "polarsplat/antenna.hpp"

#include <algorithm>
#include <cmath>

namespace polarsplat {
namespace {

constexpr double kFillWeight = 0.25;
const double kUpperCutoff = deg2rad(0.5);   // fill-in fades out above the plane
const double kLowerLimit = deg2rad(40.0);
const double kLowerCutoff = deg2rad(1.0);

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void GainTable::validate() const {
    if (angles.size() < 2 || angles.size() != gains.size()) {
        throw InvalidArgument("GainTable: need at least 2 samples and equal-length arrays");
    }
    for (std::size_t i = 1; i < angles.size(); ++i) {
        if (!(angles[i] > angles[i - 1])) {
            throw InvalidArgument("GainTable: angles must be strictly increasing");
        }
    }
    for (double g : gains) {
        if (!(g >= 0.0) || !std::isfinite(g)) {
            throw InvalidArgument("GainTable: gains must be finite and non-negative");
        }
    }
}

double GainTable::eval(double angle) const {
    if (angle <= angles.front()) return gains.front();
    if (angle >= angles.back()) return gains.back();
    const auto it = std::upper_bound(angles.begin(), angles.end(), angle);
    const auto i = static_cast<std::size_t>(it - angles.begin());
    const double t = (angle - angles[i - 1]) / (angles[i] - angles[i - 1]);
    return gains[i - 1] + t * (gains[i] - gains[i - 1]);
}

double GainTable::slope(double angle) const {
    if (angle <= angles.front() || angle >= angles.back()) return 0.0;
    const auto it = std::upper_bound(angles.begin(), angles.end(), angle);
    const auto i = static_cast<std::size_t>(it - angles.begin());
    return (gains[i] - gains[i - 1]) / (angles[i] - angles[i - 1]);
}

AntennaGains::AntennaGains(const RadarConfig& cfg) {
    if (!(cfg.beam_spread > 0.0)) {
        throw InvalidArgument("AntennaGains: beam_spread must be positive");
    }
    beam_spread_ = deg2rad(cfg.beam_spread);
    // -3 dB (half power) at +-beam_spread/2
    az_sigma_ = 0.5 * beam_spread_ / std::sqrt(2.0 * std::log(2.0));
    el_sigma_ = az_sigma_;
    fill_floor_ = std::sin(0.5 * beam_spread_);
    el_norm_ = 1.0;
    el_norm_ = elevation_raw(0.0, nullptr);
}

double AntennaGains::azimuth(double dtheta) const {
    dtheta = wrap_angle(dtheta);
    if (az_table_) return az_table_->eval(dtheta);
    return std::exp(-0.5 * dtheta * dtheta / (az_sigma_ * az_sigma_));
}

double AntennaGains::elevation_raw(double phi, double* deriv) const {
    const double s2 = el_sigma_ * el_sigma_;
    const double main = std::exp(-0.5 * phi * phi / s2);
    const double f0 = fill_floor_ * fill_floor_;
    const double sn = std::sin(phi);
    const double den = f0 + sn * sn;
    const double csc = f0 / den;
    const double up = logistic(-phi / kUpperCutoff);
    const double low = logistic((phi + kLowerLimit) / kLowerCutoff);
    const double g = main + kFillWeight * csc * up * low;
    if (deriv) {
        const double d_main = -phi / s2 * main;
        const double d_csc = -f0 * std::sin(2.0 * phi) / (den * den);
        const double d_up = -up * (1.0 - up) / kUpperCutoff;
        const double d_low = low * (1.0 - low) / kLowerCutoff;
        *deriv = (d_main + kFillWeight * (d_csc * up * low + csc * d_up * low + csc * up * d_low)) / el_norm_;
    }
    return g / el_norm_;
}

double AntennaGains::elevation(double phi) const {
    if (el_table_) return el_table_->eval(phi);
    return elevation_raw(phi, nullptr);
}

double AntennaGains::elevation_derivative(double phi) const {
    if (el_table_) return el_table_->slope(phi);
    double d = 0.0;
    elevation_raw(phi, &d);
    return d;
}

void AntennaGains::set_azimuth_table(GainTable t) {
    t.validate();
    az_table_ = std::move(t);
}

void AntennaGains::set_elevation_table(GainTable t) {
    t.validate();
    el_table_ = std::move(t);
}

}  // namespace polarsplat
