#include "polarsplat/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>

namespace polarsplat {
namespace {

// FFTW planning is not thread-safe; plans are created once per length under a
// lock and executed with the new-array interface afterwards.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan r2c(int n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) {
            return it->second;
        }
        auto* in = fftw_alloc_real(static_cast<std::size_t>(n));
        auto* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        fftw_plan plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(n, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [n, plan] : plans_) {
            fftw_destroy_plan(plan);
        }
    }

    std::mutex mutex_;
    std::map<int, fftw_plan> plans_;
};

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

long reflect_index(long i, long n) {
    const long period = 2 * n;
    i %= period;
    if (i < 0) {
        i += period;
    }
    return i < n ? i : period - 1 - i;
}

}  // namespace

BeamSpectrum range_fft(std::span<const double> beam) {
    const std::size_t n = beam.size();
    if (n < 2) {
        throw EmptyBeam("range_fft needs at least 2 samples");
    }
    const int ni = static_cast<int>(n);
    std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n));
    std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(n / 2 + 1));
    std::copy(beam.begin(), beam.end(), in.get());
    fftw_execute_dft_r2c(PlanCache::instance().r2c(ni), in.get(), out.get());

    BeamSpectrum s;
    s.magnitudes.resize(n);
    s.phases.resize(n);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const std::complex<double> c(out.get()[k][0], out.get()[k][1]);
        s.magnitudes[k] = std::abs(c);
        s.phases[k] = std::arg(c);
        if (k > 0 && k < n - k) {
            // real input: X[N-k] = conj(X[k])
            s.magnitudes[n - k] = s.magnitudes[k];
            s.phases[n - k] = -s.phases[k];
        }
    }
    return s;
}

double constant_ratio(const BeamSpectrum& s, double eps) {
    if (s.size() < 2) {
        throw EmptyBeam("constant_ratio needs at least 2 bins");
    }
    double ac = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        ac += s.magnitudes[k];
    }
    return s.magnitudes[0] / (ac + eps);
}

SpectralPeak peak_component(const BeamSpectrum& s) {
    if (s.size() < 4) {
        throw EmptyBeam("peak_component needs at least 4 bins");
    }
    SpectralPeak best{1, s.magnitudes[1], s.phases[1]};
    for (std::size_t k = 2; k <= s.size() / 2; ++k) {
        // relative slack so FFT round-off does not break exact ties
        if (s.magnitudes[k] > best.magnitude * (1.0 + 1e-12)) {
            best = {k, s.magnitudes[k], s.phases[k]};
        }
    }
    return best;
}

std::vector<double> gaussian_kernel(double sigma, double radius_sigmas) {
    if (!(sigma > 0.0)) {
        throw InvalidArgument("gaussian_kernel: sigma must be positive");
    }
    const auto radius = static_cast<long>(std::ceil(radius_sigmas * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

void convolve_reflect(std::span<const double> x, std::span<const double> kernel, std::span<double> out) {
    const long n = static_cast<long>(x.size());
    const long half = static_cast<long>(kernel.size() / 2);
    const long taps = static_cast<long>(kernel.size());
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        if (i - half >= 0 && i + half < n) {
            const double* xp = x.data() + (i - half);
            for (long t = 0; t < taps; ++t) {
                acc += kernel[static_cast<std::size_t>(t)] * xp[t];
            }
        } else {
            for (long t = 0; t < taps; ++t) {
                acc += kernel[static_cast<std::size_t>(t)] * x[static_cast<std::size_t>(reflect_index(i + t - half, n))];
            }
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
}

std::vector<double> convolve_reflect(std::span<const double> x, std::span<const double> kernel) {
    std::vector<double> out(x.size());
    convolve_reflect(x, kernel, out);
    return out;
}

void convolve_reflect_adjoint(std::span<const double> grad_out, std::span<const double> kernel,
                              std::span<double> grad_in) {
    const long n = static_cast<long>(grad_out.size());
    const long half = static_cast<long>(kernel.size() / 2);
    const long taps = static_cast<long>(kernel.size());
    std::fill(grad_in.begin(), grad_in.end(), 0.0);
    for (long i = 0; i < n; ++i) {
        const double g = grad_out[static_cast<std::size_t>(i)];
        if (g == 0.0) {
            continue;
        }
        if (i - half >= 0 && i + half < n) {
            double* gp = grad_in.data() + (i - half);
            for (long t = 0; t < taps; ++t) {
                gp[t] += kernel[static_cast<std::size_t>(t)] * g;
            }
        } else {
            for (long t = 0; t < taps; ++t) {
                grad_in[static_cast<std::size_t>(reflect_index(i + t - half, n))] += kernel[static_cast<std::size_t>(t)] * g;
            }
        }
    }
}

std::vector<double> gaussian_smooth(std::span<const double> x, double sigma_bins) {
    const auto k = gaussian_kernel(sigma_bins, 3.0);
    return convolve_reflect(x, k);
}

LeakageKernel leakage_kernel(const RadarConfig& cfg) {
    if (!(cfg.sampling_duration > 0.0 && cfg.chirp_slope > 0.0 && cfg.range_resolution > 0.0)) {
        throw InvalidArgument("leakage_kernel: T_s, mu and range resolution must be positive");
    }
    LeakageKernel lk;
    const double f_w = kTwoPi / cfg.sampling_duration;
    lk.width_m = kSpeedOfLight * f_w / (2.0 * cfg.chirp_slope);
    lk.sigma_m = 0.5 * lk.width_m / 3.0;
    lk.sigma_bins = lk.sigma_m / cfg.range_resolution;
    lk.taps = gaussian_kernel(lk.sigma_bins, 3.0);
    return lk;
}

}  // namespace polarsplat
