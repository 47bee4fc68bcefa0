#include "polarsplat/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace polarsplat {

void LossWeights::validate() const {
    if (!(l1 >= 0.0 && ssim >= 0.0 && occ >= 0.0 && size >= 0.0 && reg >= 0.0)) {
        throw InvalidArgument("LossWeights: weights must be nonnegative");
    }
}

namespace {

constexpr int kSsimRadius = 5;
constexpr double kSsimSigma = 1.5;

std::vector<double> ssim_window() {
    std::vector<double> w(2 * kSsimRadius + 1);
    double s = 0.0;
    for (int t = -kSsimRadius; t <= kSsimRadius; ++t) {
        w[static_cast<std::size_t>(t + kSsimRadius)] = std::exp(-0.5 * t * t / (kSsimSigma * kSsimSigma));
        s += w[static_cast<std::size_t>(t + kSsimRadius)];
    }
    for (double& v : w) v /= s;
    return w;
}

// Sum of in-bounds window taps at each position of an axis of length n.
std::vector<double> border_norm(const std::vector<double>& w, long n) {
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (long i = 0; i < n; ++i) {
        for (int t = -kSsimRadius; t <= kSsimRadius; ++t) {
            if (i + t >= 0 && i + t < n) out[static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(t + kSsimRadius)];
        }
    }
    return out;
}

// Zero-padded separable correlation with a symmetric window.
Image conv2(const Image& x, const std::vector<double>& w) {
    const long rows = x.rows(), cols = x.cols();
    Image h = Image::Zero(rows, cols);
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < cols; ++j) {
            double s = 0.0;
            const long lo = std::max(-static_cast<long>(kSsimRadius), -j);
            const long hi = std::min(static_cast<long>(kSsimRadius), cols - 1 - j);
            for (long t = lo; t <= hi; ++t) s += w[static_cast<std::size_t>(t + kSsimRadius)] * x(i, j + t);
            h(i, j) = s;
        }
    }
    Image out = Image::Zero(rows, cols);
    for (long t = -kSsimRadius; t <= kSsimRadius; ++t) {
        const double wt = w[static_cast<std::size_t>(t + kSsimRadius)];
        const long i0 = std::max(0L, -t);
        const long i1 = std::min(rows, rows - t);
        if (i1 <= i0) continue;
        out.middleRows(i0, i1 - i0) += wt * h.middleRows(i0 + t, i1 - i0);
    }
    return out;
}

struct SsimFilter {
    std::vector<double> w;
    Eigen::ArrayXXd inv_norm;  // 1 / (row norm * col norm)

    SsimFilter(long rows, long cols) : w(ssim_window()) {
        const auto nr = border_norm(w, rows);
        const auto nc = border_norm(w, cols);
        inv_norm.resize(rows, cols);
        for (long i = 0; i < rows; ++i) {
            for (long j = 0; j < cols; ++j) inv_norm(i, j) = 1.0 / (nr[static_cast<std::size_t>(i)] * nc[static_cast<std::size_t>(j)]);
        }
    }
    Image apply(const Image& x) const { return (conv2(x, w).array() * inv_norm).matrix(); }
    Image adjoint(const Image& g) const { return conv2((g.array() * inv_norm).matrix(), w); }
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double ssim(const Image& a, const Image& b, std::size_t first_col, Image* grad_a) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch("ssim: image sizes differ");
    }
    const long c0 = std::min<long>(static_cast<long>(first_col), a.cols());
    const long cols = a.cols() - c0;
    if (a.rows() == 0 || cols == 0) {
        throw DimensionMismatch("ssim: no pixels to compare");
    }
    const Image x = a.rightCols(cols);
    const Image y = b.rightCols(cols);
    const SsimFilter f(x.rows(), cols);
    const Eigen::ArrayXXd mx = f.apply(x).array();
    const Eigen::ArrayXXd my = f.apply(y).array();
    const Eigen::ArrayXXd sxx = f.apply(x.array().square().matrix()).array();
    const Eigen::ArrayXXd syy = f.apply(y.array().square().matrix()).array();
    const Eigen::ArrayXXd sxy = f.apply((x.array() * y.array()).matrix()).array();
    const Eigen::ArrayXXd exx = sxx - mx.square();
    const Eigen::ArrayXXd eyy = syy - my.square();
    const Eigen::ArrayXXd exy = sxy - mx * my;
    const Eigen::ArrayXXd a1 = 2.0 * mx * my + kSsimC1;
    const Eigen::ArrayXXd a2 = 2.0 * exy + kSsimC2;
    const Eigen::ArrayXXd b1 = mx.square() + my.square() + kSsimC1;
    const Eigen::ArrayXXd b2 = exx + eyy + kSsimC2;
    const Eigen::ArrayXXd num = a1 * a2;
    const Eigen::ArrayXXd den = b1 * b2;
    const Eigen::ArrayXXd s = num / den;
    const double count = static_cast<double>(s.size());
    const double score = s.sum() / count;

    if (grad_a) {
        const Eigen::ArrayXXd d_mx = (2.0 * my * (a2 - a1) * den - num * 2.0 * mx * (b2 - b1)) / den.square() / count;
        const Eigen::ArrayXXd d_sxx = -num * b1 / den.square() / count;
        const Eigen::ArrayXXd d_sxy = 2.0 * a1 / den / count;
        const Eigen::ArrayXXd g = f.adjoint(d_mx.matrix()).array() + 2.0 * x.array() * f.adjoint(d_sxx.matrix()).array() +
                                  y.array() * f.adjoint(d_sxy.matrix()).array();
        *grad_a = Image::Zero(a.rows(), a.cols());
        grad_a->rightCols(cols) = g.matrix();
    }
    return score;
}

LossTerms total_loss(const Image& render, const Image& gt, const Image& alpha, const Image& occ_polar,
                     const GaussianScene& scene, const LossWeights& weights, std::size_t first_col,
                     LossGradient* grad) {
    weights.validate();
    if (render.rows() != gt.rows() || render.cols() != gt.cols() || alpha.rows() != gt.rows() ||
        alpha.cols() != gt.cols() || occ_polar.rows() != gt.rows() || occ_polar.cols() != gt.cols()) {
        throw DimensionMismatch("total_loss: image sizes differ");
    }
    const long c0 = std::min<long>(static_cast<long>(first_col), gt.cols());
    const long cols = gt.cols() - c0;
    if (gt.rows() == 0 || cols == 0) {
        throw DimensionMismatch("total_loss: no valid pixels");
    }
    const double count = static_cast<double>(gt.rows() * cols);
    const Image rc = render.unaryExpr(&clamp01);
    const Image ac = alpha.unaryExpr(&clamp01);

    LossTerms t;
    const Eigen::ArrayXXd diff = (rc - gt).rightCols(cols).array();
    t.l1 = diff.abs().sum() / count;
    Image d_ssim;
    const double sc = ssim(rc, gt, static_cast<std::size_t>(c0), grad ? &d_ssim : nullptr);
    t.ssim = 1.0 - sc;
    const Eigen::ArrayXXd odiff = (ac - occ_polar).rightCols(cols).array();
    t.occ = odiff.abs().sum() / count;

    const double ng = scene.gaussians.empty() ? 1.0 : static_cast<double>(scene.size());
    for (const auto& g : scene.gaussians) {
        for (int k = 0; k < 3; ++k) t.size += std::max(0.0, std::exp(g.log_scale[k]) - scene.s_max);
        t.reg += std::max(0.0, g.alpha() + g.eta() - 1.0);
    }
    t.size /= ng;
    t.reg /= ng;
    t.total = weights.l1 * t.l1 + weights.ssim * t.ssim + weights.occ * t.occ + weights.size * t.size +
              weights.reg * t.reg;

    if (grad) {
        grad->d_render = Image::Zero(gt.rows(), gt.cols());
        grad->d_alpha = Image::Zero(gt.rows(), gt.cols());
        const Eigen::ArrayXXd sgn = diff.sign();
        Eigen::ArrayXXd dr = weights.l1 * sgn / count - weights.ssim * d_ssim.rightCols(cols).array();
        Eigen::ArrayXXd da = weights.occ * odiff.sign() / count;
        // clamp pass-through: renders are nonnegative, so only the upper bound bites
        dr *= (render.rightCols(cols).array() < 1.0).cast<double>();
        da *= (alpha.rightCols(cols).array() < 1.0).cast<double>();
        grad->d_render.rightCols(cols) = dr.matrix();
        grad->d_alpha.rightCols(cols) = da.matrix();

        grad->d_params.assign(scene.parameter_count(), 0.0);
        for (std::size_t i = 0; i < scene.size(); ++i) {
            const Gaussian& g = scene.gaussians[i];
            double* gp = grad->d_params.data() + i * kParamsPerGaussian;
            for (int k = 0; k < 3; ++k) {
                const double s = std::exp(g.log_scale[k]);
                if (s > scene.s_max) gp[param::kLogScale + k] += weights.size * s / ng;
            }
            const double a = g.alpha(), e = g.eta();
            if (a + e > 1.0) {
                gp[param::kAlpha] += weights.reg * a * (1.0 - a) / ng;
                gp[param::kEta] += weights.reg * e * (1.0 - e) / ng;
            }
        }
    }
    return t;
}

namespace {

LossTerms frame_loss_impl(const Renderer& renderer, const GaussianScene& scene, const FrameTarget& target,
                          bool use_multipath, const LossWeights& weights, SceneGradient* grad) {
    const RadarConfig& cfg = renderer.config();
    const auto rows = static_cast<long>(cfg.n_azimuth);
    const auto cols = static_cast<long>(cfg.n_range);
    if (target.gt.rows() != rows || target.gt.cols() != cols) {
        throw DimensionMismatch("frame_loss: target does not match the renderer configuration");
    }
    const std::vector<RenderMode> modes = {RenderMode::Sigma, RenderMode::Alpha};
    std::vector<Image> out = renderer.render(scene, target.pose, modes);
    if (use_multipath && target.multipath) {
        if (target.multipath->rows() != rows || target.multipath->cols() != cols) {
            throw DimensionMismatch("frame_loss: multipath image has the wrong shape");
        }
        out[0] += *target.multipath;
    }
    LossGradient lg;
    const LossTerms t = total_loss(out[0], target.gt, out[1], target.occ_polar, scene, weights, cfg.first_valid_bin(),
                                   grad ? &lg : nullptr);
    if (grad) {
        *grad = std::move(lg.d_params);
        renderer.backward(scene, target.pose, modes, {lg.d_render, lg.d_alpha}, *grad);
    }
    return t;
}

bool finite(const LossTerms& t) {
    return std::isfinite(t.total) && std::isfinite(t.l1) && std::isfinite(t.ssim) && std::isfinite(t.occ) &&
           std::isfinite(t.size) && std::isfinite(t.reg);
}

}  // namespace

LossTerms frame_loss(const Renderer& renderer, const GaussianScene& scene, const FrameTarget& target,
                     const LossWeights& weights, SceneGradient* grad) {
    return frame_loss_impl(renderer, scene, target, true, weights, grad);
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && eps > 0.0)) {
        throw InvalidArgument("Adam: need betas in [0, 1) and eps > 0");
    }
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, const std::vector<double>& lr) {
    if (params.size() != m_.size() || grad.size() != m_.size() || lr.size() != m_.size()) {
        throw DimensionMismatch("Adam::step: vector sizes differ");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
        v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
        if (lr[i] == 0.0) continue;
        params[i] -= lr[i] * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

void Adam::compact(const std::vector<bool>& keep) {
    if (keep.size() != m_.size()) {
        throw DimensionMismatch("Adam::compact: mask size differs");
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) continue;
        m_[k] = m_[i];
        v_[k] = v_[i];
        ++k;
    }
    m_.resize(k);
    v_.resize(k);
}

std::vector<double> learning_rate_vector(const GaussianScene& scene, const LearningRates& lr, double extent) {
    std::vector<double> out(scene.parameter_count());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        double* d = out.data() + i * kParamsPerGaussian;
        for (int k = 0; k < 3; ++k) d[param::kMean + k] = lr.mean * extent;
        for (int k = 0; k < 4; ++k) d[param::kQuat + k] = lr.quat;
        for (int k = 0; k < 3; ++k) d[param::kLogScale + k] = lr.log_scale;
        d[param::kAlpha] = lr.logit;
        d[param::kEta] = lr.logit;
        for (int k = 0; k < kShCount; ++k) d[param::kSh + k] = lr.sh;
    }
    out.back() = lr.transmit;
    return out;
}

void TrainConfig::validate() const {
    weights.validate();
    if (!(scene_extent > 0.0) || !(s_max > 0.0)) {
        throw InvalidArgument("TrainConfig: scene_extent and s_max must be positive");
    }
    if (!(lr.mean >= 0.0 && lr.quat >= 0.0 && lr.log_scale >= 0.0 && lr.logit >= 0.0 && lr.sh >= 0.0 &&
          lr.transmit >= 0.0)) {
        throw InvalidArgument("TrainConfig: learning rates must be nonnegative");
    }
    if (prune && prune_every == 0) {
        throw InvalidArgument("TrainConfig: prune_every must be positive");
    }
}

std::vector<bool> prune_mask(const GaussianScene& scene, double threshold) {
    constexpr int kViews = 36;
    std::vector<bool> keep(scene.size(), true);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian& g = scene.gaussians[i];
        double rho = 0.0;
        for (int v = 0; v < kViews; ++v) rho += reflectivity(g, kTwoPi * v / kViews);
        rho /= kViews;
        keep[i] = std::max(g.alpha(), g.eta()) * rho >= threshold;
    }
    return keep;
}

TrainResult optimize(GaussianScene& scene, const std::vector<FrameTarget>& frames, const Renderer& renderer,
                     const TrainConfig& config) {
    config.validate();
    TrainResult result;
    if (config.iterations == 0) return result;
    if (frames.empty()) {
        throw InvalidArgument("optimize: need at least one training frame");
    }
    scene.validate();
    scene.s_max = config.s_max;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(frames.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();

    Adam adam(scene.parameter_count());
    std::vector<double> lr = learning_rate_vector(scene, config.lr, config.scene_extent);
    std::vector<double> params = scene.pack();
    SceneGradient grad;
    result.history.reserve(config.iterations);

    for (std::size_t it = 0; it < config.iterations; ++it) {
        if (cursor == order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
        }
        const std::size_t fi = order[cursor++];
        const LossTerms t = frame_loss_impl(renderer, scene, frames[fi], config.compose_multipath, config.weights, &grad);
        const bool grad_ok = std::all_of(grad.begin(), grad.end(), [](double v) { return std::isfinite(v); });
        if (!finite(t) || !grad_ok) {
            std::ostringstream os;
            os << "iteration " << it << ", frame " << fi << ": total=" << t.total << " l1=" << t.l1 << " ssim=" << t.ssim
               << " occ=" << t.occ << " size=" << t.size << " reg=" << t.reg
               << (grad_ok ? "" : " (non-finite gradient)");
            throw NonFiniteLoss(os.str());
        }
        result.history.push_back(t);
        if (config.on_iteration) config.on_iteration(it, t);

        adam.step(params, grad, lr);
        for (std::size_t i = 0; i < scene.size(); ++i) {
            double* q = params.data() + i * kParamsPerGaussian + param::kQuat;
            if (lr[i * kParamsPerGaussian + param::kQuat] == 0.0) continue;
            const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
            if (n > 0.0) {
                for (int k = 0; k < 4; ++k) q[k] /= n;
            }
        }
        scene.unpack(params);

        if (config.prune && (it + 1) % config.prune_every == 0 && it + 1 < config.iterations) {
            const std::vector<bool> keep = prune_mask(scene, config.prune_threshold);
            const auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
            if (kept > 0 && kept < scene.size()) {
                std::vector<bool> pkeep;
                pkeep.reserve(params.size());
                std::vector<Gaussian> next;
                next.reserve(kept);
                for (std::size_t i = 0; i < scene.size(); ++i) {
                    if (keep[i]) next.push_back(scene.gaussians[i]);
                    pkeep.insert(pkeep.end(), kParamsPerGaussian, keep[i]);
                }
                pkeep.push_back(true);
                result.pruned += scene.size() - kept;
                scene.gaussians = std::move(next);
                adam.compact(pkeep);
                lr = learning_rate_vector(scene, config.lr, config.scene_extent);
                params = scene.pack();
            }
        }
        if (config.checkpoint_every && config.on_checkpoint && (it + 1) % config.checkpoint_every == 0) {
            config.on_checkpoint(scene, it + 1);
        }
    }
    return result;
}

GradCheckResult grad_check(const Renderer& renderer, const GaussianScene& scene, const FrameTarget& target,
                           const LossWeights& weights) {
    SceneGradient analytic;
    frame_loss(renderer, scene, target, weights, &analytic);
    const std::vector<double> p = scene.pack();
    double scale = 0.0;
    for (double v : analytic) scale = std::max(scale, std::abs(v));

    std::vector<bool> skip(p.size(), false);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian& g = scene.gaussians[i];
        const std::size_t base = i * kParamsPerGaussian;
        const double a = g.alpha(), e = g.eta();
        if (std::abs(a + e - 1.0) < 1e-3) {
            skip[base + param::kAlpha] = skip[base + param::kEta] = true;
        }
        for (int k = 0; k < 3; ++k) {
            if (std::abs(std::exp(g.log_scale[k]) - scene.s_max) < 1e-3 * scene.s_max) skip[base + param::kLogScale + k] = true;
        }
        // the reflectivity clamp is a hinge in every parameter that moves the view
        const double view = view_angle(g, target.pose);
        double raw = g.sh[0];
        for (int l = 1; l <= kShDegree; ++l) {
            raw += g.sh[static_cast<std::size_t>(2 * l - 1)] * std::cos(l * view) +
                   g.sh[static_cast<std::size_t>(2 * l)] * std::sin(l * view);
        }
        if (std::abs(raw) < 1e-3 || std::abs(raw - 1.0) < 1e-3) {
            for (int k = 0; k < param::kSh + kShCount; ++k) skip[base + static_cast<std::size_t>(k)] = true;
        }
    }

    GradCheckResult r;
    GaussianScene t = scene;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (skip[i]) {
            ++r.excluded;
            continue;
        }
        const double h = 1e-4 * std::max(1.0, std::abs(p[i]));
        std::vector<double> q = p;
        q[i] = p[i] + h;
        t.unpack(q);
        const double fp = frame_loss(renderer, t, target, weights).total;
        q[i] = p[i] - h;
        t.unpack(q);
        const double fm = frame_loss(renderer, t, target, weights).total;
        const double numeric = (fp - fm) / (2.0 * h);
        const double den = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6 * scale, 1e-300});
        const double err = std::abs(analytic[i] - numeric) / den;
        ++r.checked;
        if (err > r.max_rel_error) {
            r.max_rel_error = err;
            r.worst_index = i;
        }
    }
    return r;
}

}  // namespace polarsplat
