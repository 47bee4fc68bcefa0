#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "polarsplat/core.hpp"

namespace polarsplat {

/// Full-length DFT of one range beam, X[k] = sum_n x[n] exp(-j 2 pi k n / N).
struct BeamSpectrum {
    std::vector<double> magnitudes;
    std::vector<double> phases;

    std::size_t size() const { return magnitudes.size(); }
};

struct SpectralPeak {
    std::size_t k = 0;
    double magnitude = 0.0;
    double phase = 0.0;
};

BeamSpectrum range_fft(std::span<const double> beam);

/// |X[0]| / (sum_{k>=1} |X[k]| + eps)
double constant_ratio(const BeamSpectrum& s, double eps = 1e-12);

/// Strongest non-DC component within k in [1, N/2], ties to the smaller k.
SpectralPeak peak_component(const BeamSpectrum& s);

/// Unit-sum sampled Gaussian truncated at +-radius_sigmas * sigma. Odd length,
/// centered at index size()/2.
std::vector<double> gaussian_kernel(double sigma, double radius_sigmas = 3.0);

/// Convolution with an odd-length centered kernel using half-sample symmetric
/// reflection (d c b a | a b c d) at both ends. Output length equals input length.
std::vector<double> convolve_reflect(std::span<const double> x, std::span<const double> kernel);
void convolve_reflect(std::span<const double> x, std::span<const double> kernel, std::span<double> out);
/// Adjoint of convolve_reflect with respect to x.
void convolve_reflect_adjoint(std::span<const double> grad_out, std::span<const double> kernel,
                              std::span<double> grad_in);

std::vector<double> gaussian_smooth(std::span<const double> x, double sigma_bins);

/// Gaussian stand-in for the windowed range-FFT sinc: d_w = c f_w / (2 mu) with
/// f_w = 2 pi / T_s, sigma_w = 0.5 d_w / 3.
struct LeakageKernel {
    double width_m = 0.0;      // d_w
    double sigma_m = 0.0;      // sigma_w
    double sigma_bins = 0.0;   // sigma_w / range_resolution
    std::vector<double> taps;  // unit sum, odd length
};

LeakageKernel leakage_kernel(const RadarConfig& cfg);

}  // namespace polarsplat
