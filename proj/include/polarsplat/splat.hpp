#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "polarsplat/antenna.hpp"
#include "polarsplat/core.hpp"

namespace polarsplat {

inline constexpr int kShDegree = 10;
inline constexpr int kShCount = 2 * kShDegree + 1;
/// mean 3, quaternion 4 (wxyz), log-scale 3, alpha logit, eta logit, sh.
inline constexpr int kParamsPerGaussian = 3 + 4 + 3 + 1 + 1 + kShCount;

namespace param {
inline constexpr int kMean = 0;
inline constexpr int kQuat = 3;
inline constexpr int kLogScale = 7;
inline constexpr int kAlpha = 10;
inline constexpr int kEta = 11;
inline constexpr int kSh = 12;
}  // namespace param

double sigmoid(double x);
double logit(double p);

struct Gaussian {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector4d quat = Eigen::Vector4d(1, 0, 0, 0);  // wxyz, normalized on use
    Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
    double alpha_logit = 0.0;
    double eta_logit = 0.0;
    /// Circular harmonics: [a_0, a_1, b_1, ..., a_L, b_L].
    std::array<double, kShCount> sh{};

    static Gaussian make(const Eigen::Vector3d& mean, double scale, double alpha, double eta, double a0);

    double alpha() const { return sigmoid(alpha_logit); }
    double eta() const { return sigmoid(eta_logit); }
    Eigen::Vector3d scale() const { return log_scale.array().exp(); }
    Eigen::Matrix3d rotation() const;
    Eigen::Matrix3d covariance() const;
};

struct GaussianScene {
    std::vector<Gaussian> gaussians;
    double log_transmit_scale = 0.0;
    double s_max = 1.0;

    double transmit_scale() const;
    std::size_t size() const { return gaussians.size(); }
    void validate() const;

    /// Flat parameter vector: kParamsPerGaussian per Gaussian, then log transmit scale.
    std::vector<double> pack() const;
    void unpack(const std::vector<double>& params);
    std::size_t parameter_count() const { return gaussians.size() * kParamsPerGaussian + 1; }
};

enum class RenderMode { Sigma, Alpha, RhoAlpha, RhoEta };

std::string to_string(RenderMode m);
RenderMode parse_render_mode(const std::string& s);

/// World azimuth of the sensor as seen from the Gaussian.
double view_angle(const Gaussian& g, const Pose& pose);

/// Circular-harmonic reflectivity clamped to [0, 1].
double reflectivity(const Gaussian& g, double view);
/// rho * min(alpha + eta, 1).
double power_return_ratio(const Gaussian& g, double view);
/// Per-Gaussian weight entering the elevation sum for the given mode.
double mode_weight(const Gaussian& g, double view, RenderMode mode);

struct RenderOptions {
    std::size_t q = 10;          // fine azimuth rows per beam
    double cutoff_sigma = 3.0;   // footprint box in (theta, r) std units
    std::size_t threads = 0;     // 0: POLARSPLAT_THREADS or hardware concurrency
};

/// Thread count from POLARSPLAT_THREADS, falling back to the hardware.
std::size_t default_thread_count();

/// Gradient of a scalar with respect to GaussianScene::pack().
using SceneGradient = std::vector<double>;

/// The radar rendering pipeline: elevation accumulation on an (H Q) x W grid,
/// strided azimuth convolution down to H x W, and range leakage blur. Range
/// bins closer than min_valid_range are not rendered.
class Renderer {
public:
    Renderer(const RadarConfig& cfg, const AntennaGains& gains, const RenderOptions& options = {});

    const RadarConfig& config() const { return cfg_; }
    const RenderOptions& options() const { return opt_; }
    const std::vector<double>& azimuth_kernel() const { return az_kernel_; }
    const std::vector<double>& leakage_taps() const { return leak_taps_; }

    Image project_elevation(const GaussianScene& scene, const Pose& pose, RenderMode mode) const;
    /// One elevation image per mode, sharing footprint evaluation.
    std::vector<Image> project_elevation(const GaussianScene& scene, const Pose& pose,
                                         const std::vector<RenderMode>& modes) const;

    Image project_azimuth(const Image& elev) const;
    Image project_azimuth_adjoint(const Image& grad_azi) const;
    Image apply_leakage(const Image& img) const;
    Image apply_leakage_adjoint(const Image& grad) const;

    Image render(const GaussianScene& scene, const Pose& pose, RenderMode mode) const;
    std::vector<Image> render(const GaussianScene& scene, const Pose& pose, const std::vector<RenderMode>& modes) const;

    /// Accumulates into `grad` the gradient of a scalar whose derivative with
    /// respect to render(scene, pose, modes[c]) is grads[c].
    void backward(const GaussianScene& scene, const Pose& pose, const std::vector<RenderMode>& modes,
                  const std::vector<Image>& grads, SceneGradient& grad) const;

private:
    std::size_t thread_count() const;

    RadarConfig cfg_;
    AntennaGains gains_;
    RenderOptions opt_;
    std::vector<double> az_kernel_;
    std::vector<double> leak_taps_;
    std::vector<double> inv_r4_;
    std::size_t first_bin_;
};

/// Strided circular azimuth convolution with a 2Q-tap kernel.
Image project_azimuth(const Image& elev, const std::vector<double>& kernel, std::size_t q);
/// Per-row range convolution with reflective borders.
Image apply_leakage(const Image& img, const std::vector<double>& kernel);
/// 2Q unit-sum taps sampled from the azimuth gain over [-beam_spread/2, beam_spread/2].
std::vector<double> azimuth_kernel(const AntennaGains& gains, std::size_t q);

Image render(const GaussianScene& scene, const Pose& pose, const RadarConfig& cfg, RenderMode mode,
             const RenderOptions& options = {});

/// clamp(I_sigma + I_M, 0, 1).
Image compose_final(const Image& sigma, const Image& multipath);

struct SceneInitOptions {
    std::size_t count = 20000;
    double size = 0.5;
    double alpha = 0.1;
    double eta = 0.1;
    double a0 = 0.1;
    double radius = 50.0;      // m around each pose
    double min_radius = 2.5;   // m, inner hole around each pose
    double z_min = 0.0;
    double z_max = 0.0;
    double s_max = 1.0;
    std::uint64_t seed = 0;
};

/// Means drawn uniformly (by rejection) from the union of annuli
/// [min_radius, radius] around the poses; identity rotations, isotropic size.
/// The transmit scale starts at cfg.transmit_scale * dr * dtheta, which maps
/// the simulator's per-bin deposits onto the renderer's density units.
GaussianScene scene_init(const std::vector<Pose>& poses, const RadarConfig& cfg, const SceneInitOptions& options);

}  // namespace polarsplat
