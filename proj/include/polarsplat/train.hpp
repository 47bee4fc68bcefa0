#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "polarsplat/core.hpp"
#include "polarsplat/splat.hpp"

namespace polarsplat {

struct LossWeights {
    double l1 = 0.8;
    double ssim = 0.2;
    double occ = 5.0;
    double size = 1e2;
    double reg = 1e2;

    void validate() const;
};

struct LossTerms {
    double total = 0.0;
    double l1 = 0.0;
    double ssim = 0.0;  // 1 - ssim
    double occ = 0.0;
    double size = 0.0;
    double reg = 0.0;
};

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over columns >= first_col, 11x11 Gaussian window (sigma 1.5)
/// renormalized at the borders. With grad_a, also writes d(score)/d(a)
/// (zero on the excluded columns).
double ssim(const Image& a, const Image& b, std::size_t first_col = 0, Image* grad_a = nullptr);

struct LossGradient {
    Image d_render;   // w.r.t. the unclamped I_sigma + I_M
    Image d_alpha;    // w.r.t. the unclamped I_alpha
    SceneGradient d_params;  // size and regularizer terms
};

/// Weighted sum of the five loss terms. `render` and `alpha` are clamped to
/// [0, 1] before comparison; pixels with column < first_col are ignored.
LossTerms total_loss(const Image& render, const Image& gt, const Image& alpha, const Image& occ_polar,
                     const GaussianScene& scene, const LossWeights& weights, std::size_t first_col,
                     LossGradient* grad = nullptr);

/// Renders a frame, evaluates total_loss and, when grad is given, fills the
/// full gradient with respect to scene.pack().
struct FrameTarget {
    Pose pose;
    Image gt;
    Image occ_polar;
    std::optional<Image> multipath;
};

LossTerms frame_loss(const Renderer& renderer, const GaussianScene& scene, const FrameTarget& target,
                     const LossWeights& weights, SceneGradient* grad = nullptr);

struct LearningRates {
    double mean = 1.6e-4;   // multiplied by TrainConfig::scene_extent
    double quat = 1e-3;
    double log_scale = 5e-3;
    double logit = 1e-3;
    double sh = 1e-3;
    double transmit = 1e-3;
};

class Adam {
public:
    explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-15);

    /// params -= lr_i * m_hat / (sqrt(v_hat) + eps)
    void step(std::vector<double>& params, const std::vector<double>& grad, const std::vector<double>& lr);
    /// Keeps only the entries flagged in `keep`.
    void compact(const std::vector<bool>& keep);
    std::size_t size() const { return m_.size(); }

private:
    double b1_, b2_, eps_;
    std::size_t t_ = 0;
    std::vector<double> m_, v_;
};

/// Per-parameter step sizes for scene.pack().
std::vector<double> learning_rate_vector(const GaussianScene& scene, const LearningRates& lr, double extent);

struct TrainConfig {
    std::size_t iterations = 3000;
    LearningRates lr;
    double scene_extent = 1.0;
    LossWeights weights;
    std::uint64_t seed = 0;
    double s_max = 1.0;
    bool compose_multipath = true;
    bool prune = false;
    std::size_t prune_every = 500;
    double prune_threshold = 1e-3;
    std::size_t checkpoint_every = 0;
    std::function<void(const GaussianScene&, std::size_t)> on_checkpoint;
    std::function<void(std::size_t, const LossTerms&)> on_iteration;

    void validate() const;
};

struct TrainResult {
    std::vector<LossTerms> history;
    std::size_t pruned = 0;
};

/// One frame per step, frames reshuffled every pass with the configured seed.
/// Throws NonFiniteLoss when a loss or gradient stops being finite.
TrainResult optimize(GaussianScene& scene, const std::vector<FrameTarget>& frames, const Renderer& renderer,
                     const TrainConfig& config);

/// Gaussians whose max(alpha, eta) times mean reflectivity falls below threshold.
std::vector<bool> prune_mask(const GaussianScene& scene, double threshold);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::size_t excluded = 0;
};

/// Central differences of frame_loss (h = 1e-4 max(1, |p|)) against the
/// analytic gradient. Parameters within a few steps of a hinge (alpha + eta
/// = 1, a scale at s_max, a reflectivity clamp) are excluded.
GradCheckResult grad_check(const Renderer& renderer, const GaussianScene& scene, const FrameTarget& target,
                           const LossWeights& weights = {});

}  // namespace polarsplat
