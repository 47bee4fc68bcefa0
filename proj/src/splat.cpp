#include "polarsplat/splat.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <random>
#include <span>
#include <thread>

#include "polarsplat/spectral.hpp"

namespace polarsplat {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidArgument("logit: probability must lie in (0, 1)");
    }
    return std::log(p / (1.0 - p));
}

Gaussian Gaussian::make(const Eigen::Vector3d& mean, double scale, double alpha, double eta, double a0) {
    if (!(scale > 0.0)) {
        throw InvalidArgument("Gaussian: scale must be positive");
    }
    Gaussian g;
    g.mean = mean;
    g.log_scale = Eigen::Vector3d::Constant(std::log(scale));
    g.alpha_logit = logit(alpha);
    g.eta_logit = logit(eta);
    g.sh[0] = a0;
    return g;
}

Eigen::Matrix3d Gaussian::rotation() const {
    const Eigen::Vector4d q = quat.normalized();
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

Eigen::Matrix3d Gaussian::covariance() const {
    const Eigen::Matrix3d r = rotation();
    const Eigen::Vector3d v = (2.0 * log_scale).array().exp();
    return r * v.asDiagonal() * r.transpose();
}

double GaussianScene::transmit_scale() const { return std::exp(log_transmit_scale); }

void GaussianScene::validate() const {
    if (gaussians.empty()) {
        throw InvalidArgument("GaussianScene: needs at least one Gaussian");
    }
    if (!(s_max > 0.0) || !std::isfinite(log_transmit_scale)) {
        throw InvalidArgument("GaussianScene: need s_max > 0 and finite transmit scale");
    }
    for (const auto& g : gaussians) {
        if (!g.mean.allFinite() || !g.log_scale.allFinite() || !std::isfinite(g.alpha_logit) ||
            !std::isfinite(g.eta_logit) || !(g.quat.norm() > 0.0)) {
            throw InvalidArgument("GaussianScene: non-finite or degenerate Gaussian parameters");
        }
    }
}

std::vector<double> GaussianScene::pack() const {
    std::vector<double> p(parameter_count());
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        const Gaussian& g = gaussians[i];
        double* d = p.data() + i * kParamsPerGaussian;
        for (int k = 0; k < 3; ++k) d[param::kMean + k] = g.mean[k];
        for (int k = 0; k < 4; ++k) d[param::kQuat + k] = g.quat[k];
        for (int k = 0; k < 3; ++k) d[param::kLogScale + k] = g.log_scale[k];
        d[param::kAlpha] = g.alpha_logit;
        d[param::kEta] = g.eta_logit;
        for (int k = 0; k < kShCount; ++k) d[param::kSh + k] = g.sh[static_cast<std::size_t>(k)];
    }
    p.back() = log_transmit_scale;
    return p;
}

void GaussianScene::unpack(const std::vector<double>& p) {
    if (p.size() != parameter_count()) {
        throw DimensionMismatch("GaussianScene::unpack: parameter vector has the wrong length");
    }
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        Gaussian& g = gaussians[i];
        const double* d = p.data() + i * kParamsPerGaussian;
        for (int k = 0; k < 3; ++k) g.mean[k] = d[param::kMean + k];
        for (int k = 0; k < 4; ++k) g.quat[k] = d[param::kQuat + k];
        for (int k = 0; k < 3; ++k) g.log_scale[k] = d[param::kLogScale + k];
        g.alpha_logit = d[param::kAlpha];
        g.eta_logit = d[param::kEta];
        for (int k = 0; k < kShCount; ++k) g.sh[static_cast<std::size_t>(k)] = d[param::kSh + k];
    }
    log_transmit_scale = p.back();
}

std::string to_string(RenderMode m) {
    switch (m) {
        case RenderMode::Sigma: return "sigma";
        case RenderMode::Alpha: return "alpha";
        case RenderMode::RhoAlpha: return "rho_alpha";
        case RenderMode::RhoEta: return "rho_eta";
    }
    return "sigma";
}

RenderMode parse_render_mode(const std::string& s) {
    if (s == "sigma") return RenderMode::Sigma;
    if (s == "alpha") return RenderMode::Alpha;
    if (s == "rho_alpha" || s == "rhoalpha") return RenderMode::RhoAlpha;
    if (s == "rho_eta" || s == "rhoeta") return RenderMode::RhoEta;
    throw InvalidArgument("unknown render mode '" + s + "'");
}

double view_angle(const Gaussian& g, const Pose& pose) {
    return std::atan2(pose.translation.y() - g.mean.y(), pose.translation.x() - g.mean.x());
}

namespace {

double reflectivity_raw(const Gaussian& g, double view, double* d_view) {
    double v = g.sh[0];
    double dv = 0.0;
    for (int l = 1; l <= kShDegree; ++l) {
        const double a = g.sh[static_cast<std::size_t>(2 * l - 1)];
        const double b = g.sh[static_cast<std::size_t>(2 * l)];
        const double c = std::cos(l * view);
        const double s = std::sin(l * view);
        v += a * c + b * s;
        dv += l * (-a * s + b * c);
    }
    if (d_view) *d_view = dv;
    return v;
}

}  // namespace

double reflectivity(const Gaussian& g, double view) {
    return std::clamp(reflectivity_raw(g, view, nullptr), 0.0, 1.0);
}

double power_return_ratio(const Gaussian& g, double view) {
    return reflectivity(g, view) * std::min(g.alpha() + g.eta(), 1.0);
}

double mode_weight(const Gaussian& g, double view, RenderMode mode) {
    switch (mode) {
        case RenderMode::Sigma: return power_return_ratio(g, view);
        case RenderMode::Alpha: return g.alpha();
        case RenderMode::RhoAlpha: return reflectivity(g, view) * g.alpha();
        case RenderMode::RhoEta: return reflectivity(g, view) * g.eta();
    }
    return 0.0;
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("POLARSPLAT_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<std::size_t>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace {

using Ad = Eigen::AutoDiffScalar<Eigen::Matrix<double, 10, 1>>;

inline double val(double x) { return x; }
inline double val(const Ad& x) { return x.value(); }

constexpr double kPoleEps = 1e-12;

// Footprint of one Gaussian in (r, theta) plus the quantities its amplitude
// depends on. p** is the precision of the (r, theta) marginal.
template <typename T>
struct Footprint {
    T r, theta, phi, prr, prt, ptt, view;
};

// x = mean(3), quaternion wxyz(4), log-scale(3)
template <typename T>
bool compute_footprint(const std::array<T, 10>& x, const Eigen::Matrix3d& rs, const Eigen::Vector3d& ts,
                       Footprint<T>& f) {
    using std::atan2;
    using std::exp;
    using std::sqrt;
    const T qn = sqrt(x[3] * x[3] + x[4] * x[4] + x[5] * x[5] + x[6] * x[6]);
    const T w = x[3] / qn, qx = x[4] / qn, qy = x[5] / qn, qz = x[6] / qn;
    T rot[3][3];
    rot[0][0] = T(1.0) - T(2.0) * (qy * qy + qz * qz);
    rot[0][1] = T(2.0) * (qx * qy - w * qz);
    rot[0][2] = T(2.0) * (qx * qz + w * qy);
    rot[1][0] = T(2.0) * (qx * qy + w * qz);
    rot[1][1] = T(1.0) - T(2.0) * (qx * qx + qz * qz);
    rot[1][2] = T(2.0) * (qy * qz - w * qx);
    rot[2][0] = T(2.0) * (qx * qz - w * qy);
    rot[2][1] = T(2.0) * (qy * qz + w * qx);
    rot[2][2] = T(1.0) - T(2.0) * (qx * qx + qy * qy);
    const T var[3] = {exp(T(2.0) * x[7]), exp(T(2.0) * x[8]), exp(T(2.0) * x[9])};

    // world covariance, then into the sensor frame: rs^T Sigma rs
    T cw[3][3];
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            cw[i][j] = rot[i][0] * rot[j][0] * var[0] + rot[i][1] * rot[j][1] * var[1] + rot[i][2] * rot[j][2] * var[2];
            cw[j][i] = cw[i][j];
        }
    }
    T tmp[3][3];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            tmp[i][j] = cw[i][0] * rs(0, j) + cw[i][1] * rs(1, j) + cw[i][2] * rs(2, j);
        }
    }
    T cs[3][3];
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            cs[i][j] = rs(0, i) * tmp[0][j] + rs(1, i) * tmp[1][j] + rs(2, i) * tmp[2][j];
            cs[j][i] = cs[i][j];
        }
    }

    const T d[3] = {x[0] - ts.x(), x[1] - ts.y(), x[2] - ts.z()};
    T p[3];
    for (int i = 0; i < 3; ++i) {
        p[i] = rs(0, i) * d[0] + rs(1, i) * d[1] + rs(2, i) * d[2];
    }
    const T rho2 = p[0] * p[0] + p[1] * p[1];
    if (!(val(rho2) >= kPoleEps)) return false;
    const T r2 = rho2 + p[2] * p[2];
    const T r = sqrt(r2);
    const T rho = sqrt(rho2);

    // first two rows of the Cartesian -> spherical Jacobian
    const T j0[3] = {p[0] / r, p[1] / r, p[2] / r};
    const T j1[3] = {-p[1] / rho2, p[0] / rho2, T(0.0)};
    T cj0[3], cj1[3];
    for (int i = 0; i < 3; ++i) {
        cj0[i] = cs[i][0] * j0[0] + cs[i][1] * j0[1] + cs[i][2] * j0[2];
        cj1[i] = cs[i][0] * j1[0] + cs[i][1] * j1[1];
    }
    const T b00 = j0[0] * cj0[0] + j0[1] * cj0[1] + j0[2] * cj0[2];
    const T b01 = j1[0] * cj0[0] + j1[1] * cj0[1];
    const T b11 = j1[0] * cj1[0] + j1[1] * cj1[1];
    const T det = b00 * b11 - b01 * b01;
    if (!(val(det) > 0.0) || !std::isfinite(val(det))) return false;

    f.r = r;
    f.theta = atan2(p[1], p[0]);
    f.phi = atan2(p[2], rho);
    f.prr = b11 / det;
    f.prt = -b01 / det;
    f.ptt = b00 / det;
    f.view = atan2(T(ts.y()) - x[1], T(ts.x()) - x[0]);
    return true;
}

std::array<double, 10> geometry_params(const Gaussian& g) {
    return {g.mean[0], g.mean[1], g.mean[2], g.quat[0], g.quat[1], g.quat[2], g.quat[3],
            g.log_scale[0], g.log_scale[1], g.log_scale[2]};
}

// Visits every pixel whose centre lies inside the Mahalanobis ellipse
// q <= cutoff^2 and calls fn(row, col, dr, dtheta, density). Along a row the
// density follows a Gaussian recurrence in the bin index.
template <typename F>
void for_each_pixel(const Footprint<double>& f, double cutoff, double dr, double dfine, long rows, long first,
                    long cols, F&& fn) {
    const double det = f.prr * f.ptt - f.prt * f.prt;
    if (!(det > 0.0) || !(f.prr > 0.0)) return;
    const double norm = std::sqrt(det) / kTwoPi;
    const double k2 = cutoff * cutoff;
    const double ctt = f.prr / det;
    const double span = cutoff * std::sqrt(ctt);
    const bool full_circle = 2.0 * span >= kTwoPi - dfine;
    long j0 = 0, j1 = rows - 1;
    if (!full_circle) {
        j0 = static_cast<long>(std::ceil((f.theta - span) / dfine - 0.5));
        j1 = static_cast<long>(std::floor((f.theta + span) / dfine - 0.5));
    }
    const double step_decay = std::exp(-f.prr * dr * dr);
    const bool recur = f.prr * dr * dr <= 1.0;
    for (long jj = j0; jj <= j1; ++jj) {
        const long j = ((jj % rows) + rows) % rows;
        const double th_j = (static_cast<double>(jj) + 0.5) * dfine;
        const double dth = full_circle ? wrap_angle(th_j - f.theta) : th_j - f.theta;
        const double qmin = dth * dth / ctt;
        if (qmin > k2) continue;
        const double half = std::sqrt((k2 - qmin) / f.prr);
        const double centre = f.r - f.prt * dth / f.prr;
        const long n0 = std::max(first, static_cast<long>(std::ceil((centre - half) / dr - 0.5)));
        const long n1 = std::min(cols - 1, static_cast<long>(std::floor((centre + half) / dr - 0.5)));
        if (n1 < n0) continue;
        const double row_q = f.ptt * dth * dth;
        double drr = (static_cast<double>(n0) + 0.5) * dr - f.r;
        double w = norm * std::exp(-0.5 * (f.prr * drr * drr + 2.0 * f.prt * drr * dth + row_q));
        double ratio = recur ? std::exp(-0.5 * (f.prr * (2.0 * drr * dr + dr * dr) + 2.0 * f.prt * dr * dth)) : 0.0;
        for (long n = n0; n <= n1; ++n) {
            if (n > n0) {
                drr = (static_cast<double>(n) + 0.5) * dr - f.r;
                if (recur) {
                    w *= ratio;
                    ratio *= step_decay;
                } else {
                    w = norm * std::exp(-0.5 * (f.prr * drr * drr + 2.0 * f.prt * drr * dth + row_q));
                }
            }
            fn(j, n, drr, dth, w);
        }
    }
}

void run_parallel(std::size_t threads, std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n == 0 ? 1 : n));
    if (threads == 1) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(n, b + chunk);
        pool.emplace_back(fn, t, b, e);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

std::vector<double> azimuth_kernel(const AntennaGains& gains, std::size_t q) {
    if (q == 0) {
        throw InvalidArgument("azimuth_kernel: Q must be at least 1");
    }
    const double bs = gains.beam_spread();
    std::vector<double> k(2 * q);
    double sum = 0.0;
    for (std::size_t t = 0; t < 2 * q; ++t) {
        k[t] = gains.azimuth(-0.5 * bs + (static_cast<double>(t) + 0.5) * bs / static_cast<double>(2 * q));
        sum += k[t];
    }
    if (!(sum > 0.0)) {
        throw InvalidArgument("azimuth_kernel: gain profile is zero across the beam");
    }
    for (double& v : k) v /= sum;
    return k;
}

Image project_azimuth(const Image& elev, const std::vector<double>& kernel, std::size_t q) {
    if (q == 0 || kernel.size() != 2 * q) {
        throw InvalidArgument("project_azimuth: kernel must have 2Q taps");
    }
    if (elev.rows() % static_cast<long>(q) != 0) {
        throw DimensionMismatch("project_azimuth: input height is not divisible by Q");
    }
    const long fine = elev.rows();
    const long rows = fine / static_cast<long>(q);
    const long qq = static_cast<long>(q);
    Image out = Image::Zero(rows, elev.cols());
    for (long h = 0; h < rows; ++h) {
        for (long t = 0; t < 2 * qq; ++t) {
            const long j = ((h * qq - qq + t) % fine + fine) % fine;
            out.row(h) += kernel[static_cast<std::size_t>(t)] * elev.row(j);
        }
    }
    return out;
}

Image apply_leakage(const Image& img, const std::vector<double>& kernel) {
    Image out(img.rows(), img.cols());
    const auto cols = static_cast<std::size_t>(img.cols());
    for (long h = 0; h < img.rows(); ++h) {
        convolve_reflect(std::span<const double>(img.row(h).data(), cols), kernel,
                         std::span<double>(out.row(h).data(), cols));
    }
    return out;
}

Renderer::Renderer(const RadarConfig& cfg, const AntennaGains& gains, const RenderOptions& options)
    : cfg_(cfg), gains_(gains), opt_(options) {
    cfg_.validate();
    if (opt_.q == 0 || !(opt_.cutoff_sigma > 0.0)) {
        throw InvalidArgument("Renderer: need Q >= 1 and cutoff_sigma > 0");
    }
    az_kernel_ = polarsplat::azimuth_kernel(gains_, opt_.q);
    leak_taps_ = leakage_kernel(cfg_).taps;
    first_bin_ = cfg_.first_valid_bin();
    inv_r4_.resize(cfg_.n_range);
    for (std::size_t n = 0; n < cfg_.n_range; ++n) {
        inv_r4_[n] = 1.0 / std::pow(bin_to_range(n, cfg_), 4);
    }
}

std::size_t Renderer::thread_count() const {
    return opt_.threads ? opt_.threads : default_thread_count();
}

Image Renderer::project_elevation(const GaussianScene& scene, const Pose& pose, RenderMode mode) const {
    return std::move(project_elevation(scene, pose, std::vector<RenderMode>{mode}).front());
}

std::vector<Image> Renderer::project_elevation(const GaussianScene& scene, const Pose& pose,
                                               const std::vector<RenderMode>& modes) const {
    pose.validate();
    const long fine = static_cast<long>(cfg_.n_azimuth * opt_.q);
    const long cols = static_cast<long>(cfg_.n_range);
    const double dr = cfg_.range_resolution;
    const double dfine = cfg_.azimuth_step_rad() / static_cast<double>(opt_.q);
    const double ts = scene.transmit_scale();
    const Eigen::Matrix3d rs = pose.rotation.toRotationMatrix();
    const Eigen::Vector3d tr = pose.translation;
    const double min_r = cfg_.min_valid_range;
    const std::size_t nc = modes.size();

    const std::size_t threads = std::min(thread_count(), std::max<std::size_t>(1, scene.size() / 64));
    std::vector<std::vector<Image>> buffers(threads, std::vector<Image>(nc));
    for (auto& b : buffers) {
        for (auto& img : b) img = Image::Zero(fine, cols);
    }

    run_parallel(threads, scene.size(), [&](std::size_t t, std::size_t begin, std::size_t end) {
        std::vector<Image>& out = buffers[t];
        std::vector<double> amp(nc);
        for (std::size_t i = begin; i < end; ++i) {
            const Gaussian& g = scene.gaussians[i];
            Footprint<double> f{};
            if (!compute_footprint(geometry_params(g), rs, tr, f) || f.r < min_r) continue;
            const double gphi = gains_.elevation(f.phi);
            bool any = false;
            for (std::size_t c = 0; c < nc; ++c) {
                amp[c] = ts * gphi * gphi * mode_weight(g, f.view, modes[c]);
                any = any || amp[c] != 0.0;
            }
            if (!any) continue;
            for_each_pixel(f, opt_.cutoff_sigma, dr, dfine, fine, static_cast<long>(first_bin_), cols,
                           [&](long j, long n, double, double, double w) {
                               w *= inv_r4_[static_cast<std::size_t>(n)];
                               for (std::size_t c = 0; c < nc; ++c) out[c](j, n) += amp[c] * w;
                           });
        }
    });

    std::vector<Image> result = std::move(buffers[0]);
    for (std::size_t t = 1; t < threads; ++t) {
        for (std::size_t c = 0; c < nc; ++c) result[c] += buffers[t][c];
    }
    return result;
}

Image Renderer::project_azimuth(const Image& elev) const {
    return polarsplat::project_azimuth(elev, az_kernel_, opt_.q);
}

Image Renderer::project_azimuth_adjoint(const Image& grad_azi) const {
    const long qq = static_cast<long>(opt_.q);
    const long rows = grad_azi.rows();
    const long fine = rows * qq;
    Image out = Image::Zero(fine, grad_azi.cols());
    for (long h = 0; h < rows; ++h) {
        for (long t = 0; t < 2 * qq; ++t) {
            const long j = ((h * qq - qq + t) % fine + fine) % fine;
            out.row(j) += az_kernel_[static_cast<std::size_t>(t)] * grad_azi.row(h);
        }
    }
    return out;
}

Image Renderer::apply_leakage(const Image& img) const {
    return polarsplat::apply_leakage(img, leak_taps_);
}

Image Renderer::apply_leakage_adjoint(const Image& grad) const {
    Image out(grad.rows(), grad.cols());
    const auto cols = static_cast<std::size_t>(grad.cols());
    for (long h = 0; h < grad.rows(); ++h) {
        convolve_reflect_adjoint(std::span<const double>(grad.row(h).data(), cols), leak_taps_,
                                 std::span<double>(out.row(h).data(), cols));
    }
    return out;
}

Image Renderer::render(const GaussianScene& scene, const Pose& pose, RenderMode mode) const {
    return std::move(render(scene, pose, std::vector<RenderMode>{mode}).front());
}

std::vector<Image> Renderer::render(const GaussianScene& scene, const Pose& pose,
                                    const std::vector<RenderMode>& modes) const {
    std::vector<Image> elev = project_elevation(scene, pose, modes);
    std::vector<Image> out;
    out.reserve(elev.size());
    for (auto& e : elev) out.push_back(apply_leakage(project_azimuth(e)));
    return out;
}

void Renderer::backward(const GaussianScene& scene, const Pose& pose, const std::vector<RenderMode>& modes,
                        const std::vector<Image>& grads, SceneGradient& grad) const {
    if (grads.size() != modes.size()) {
        throw DimensionMismatch("Renderer::backward: one gradient image per mode required");
    }
    if (grad.size() != scene.parameter_count()) {
        grad.assign(scene.parameter_count(), 0.0);
    }
    const std::size_t nc = modes.size();
    std::vector<Image> gelev;
    gelev.reserve(nc);
    for (const auto& g : grads) {
        if (static_cast<std::size_t>(g.rows()) != cfg_.n_azimuth || static_cast<std::size_t>(g.cols()) != cfg_.n_range) {
            throw DimensionMismatch("Renderer::backward: gradient image has the wrong shape");
        }
        gelev.push_back(project_azimuth_adjoint(apply_leakage_adjoint(g)));
    }

    const long fine = static_cast<long>(cfg_.n_azimuth * opt_.q);
    const long cols = static_cast<long>(cfg_.n_range);
    const double dr = cfg_.range_resolution;
    const double dfine = cfg_.azimuth_step_rad() / static_cast<double>(opt_.q);
    const double ts = scene.transmit_scale();
    const Eigen::Matrix3d rs = pose.rotation.toRotationMatrix();
    const Eigen::Vector3d tr = pose.translation;
    const double min_r = cfg_.min_valid_range;

    const std::size_t threads = std::min(thread_count(), std::max<std::size_t>(1, scene.size() / 64));
    std::vector<double> d_log_ts(threads, 0.0);

    run_parallel(threads, scene.size(), [&](std::size_t t, std::size_t begin, std::size_t end) {
        std::vector<double> amp(nc), d_amp(nc), mw(nc);
        for (std::size_t i = begin; i < end; ++i) {
            const Gaussian& g = scene.gaussians[i];
            Footprint<double> f{};
            if (!compute_footprint(geometry_params(g), rs, tr, f) || f.r < min_r) continue;
            const double gphi = gains_.elevation(f.phi);
            const double d_gphi = gains_.elevation_derivative(f.phi);
            for (std::size_t c = 0; c < nc; ++c) {
                mw[c] = mode_weight(g, f.view, modes[c]);
                amp[c] = ts * gphi * gphi * mw[c];
                d_amp[c] = 0.0;
            }
            double sw = 0, sr = 0, st = 0, srr = 0, srt = 0, stt = 0;
            for_each_pixel(f, opt_.cutoff_sigma, dr, dfine, fine, static_cast<long>(first_bin_), cols,
                           [&](long j, long n, double drr, double dth, double w) {
                               w *= inv_r4_[static_cast<std::size_t>(n)];
                               double gw = 0.0;
                               for (std::size_t c = 0; c < nc; ++c) {
                                   const double ge = gelev[c](j, n);
                                   gw += ge * amp[c];
                                   d_amp[c] += ge * w;
                               }
                               const double a = gw * w;
                               sw += a;
                               sr += a * drr;
                               st += a * dth;
                               srr += a * drr * drr;
                               srt += a * drr * dth;
                               stt += a * dth * dth;
                           });

            // footprint parameters
            const double det = f.prr * f.ptt - f.prt * f.prt;
            const double crr = f.ptt / det, crt = -f.prt / det, ctt = f.prr / det;
            const double dl_r = f.prr * sr + f.prt * st;
            const double dl_theta = f.prt * sr + f.ptt * st;
            const double dl_prr = 0.5 * crr * sw - 0.5 * srr;
            const double dl_prt = crt * sw - srt;
            const double dl_ptt = 0.5 * ctt * sw - 0.5 * stt;

            // amplitude A_c = ts G(phi)^2 m_c
            double dl_phi = 0.0, dl_view = 0.0;
            double dl_alpha = 0.0, dl_eta = 0.0, dl_rho = 0.0;
            const double alpha = g.alpha(), eta = g.eta();
            double d_rho_view = 0.0;
            const double rho_raw = reflectivity_raw(g, f.view, &d_rho_view);
            const bool rho_live = rho_raw > 0.0 && rho_raw < 1.0;
            const double rho = std::clamp(rho_raw, 0.0, 1.0);
            for (std::size_t c = 0; c < nc; ++c) {
                const double dm = d_amp[c] * ts * gphi * gphi;
                dl_phi += d_amp[c] * ts * 2.0 * gphi * d_gphi * mw[c];
                d_log_ts[t] += d_amp[c] * amp[c];
                switch (modes[c]) {
                    case RenderMode::Sigma: {
                        const double s = alpha + eta;
                        dl_rho += dm * std::min(s, 1.0);
                        if (s < 1.0) {
                            dl_alpha += dm * rho;
                            dl_eta += dm * rho;
                        }
                        break;
                    }
                    case RenderMode::Alpha: dl_alpha += dm; break;
                    case RenderMode::RhoAlpha:
                        dl_rho += dm * alpha;
                        dl_alpha += dm * rho;
                        break;
                    case RenderMode::RhoEta:
                        dl_rho += dm * eta;
                        dl_eta += dm * rho;
                        break;
                }
            }
            double* gp = grad.data() + i * kParamsPerGaussian;
            if (rho_live) {
                dl_view += dl_rho * d_rho_view;
                gp[param::kSh] += dl_rho;
                for (int l = 1; l <= kShDegree; ++l) {
                    gp[param::kSh + 2 * l - 1] += dl_rho * std::cos(l * f.view);
                    gp[param::kSh + 2 * l] += dl_rho * std::sin(l * f.view);
                }
            }
            gp[param::kAlpha] += dl_alpha * alpha * (1.0 - alpha);
            gp[param::kEta] += dl_eta * eta * (1.0 - eta);

            // chain through the geometry with forward-mode derivatives
            const auto xd = geometry_params(g);
            std::array<Ad, 10> xa;
            for (int k = 0; k < 10; ++k) {
                xa[static_cast<std::size_t>(k)] = Ad(xd[static_cast<std::size_t>(k)], 10, k);
            }
            Footprint<Ad> fa;
            if (!compute_footprint(xa, rs, tr, fa)) continue;
            const Eigen::Matrix<double, 10, 1> dx = dl_r * fa.r.derivatives() + dl_theta * fa.theta.derivatives() +
                                                    dl_phi * fa.phi.derivatives() + dl_prr * fa.prr.derivatives() +
                                                    dl_prt * fa.prt.derivatives() + dl_ptt * fa.ptt.derivatives() +
                                                    dl_view * fa.view.derivatives();
            for (int k = 0; k < 10; ++k) gp[k] += dx[k];
        }
    });
    for (double v : d_log_ts) grad.back() += v;
}

Image render(const GaussianScene& scene, const Pose& pose, const RadarConfig& cfg, RenderMode mode,
             const RenderOptions& options) {
    return Renderer(cfg, AntennaGains(cfg), options).render(scene, pose, mode);
}

Image compose_final(const Image& sigma, const Image& multipath) {
    if (sigma.rows() != multipath.rows() || sigma.cols() != multipath.cols()) {
        throw DimensionMismatch("compose_final: image sizes differ");
    }
    return (sigma + multipath).cwiseMax(0.0).cwiseMin(1.0);
}

GaussianScene scene_init(const std::vector<Pose>& poses, const RadarConfig& cfg, const SceneInitOptions& o) {
    if (o.count == 0) {
        throw InvalidArgument("scene_init: need at least one Gaussian");
    }
    if (poses.empty()) {
        throw InvalidArgument("scene_init: need at least one pose");
    }
    if (!(o.radius > o.min_radius) || !(o.min_radius >= 0.0) || !(o.z_max >= o.z_min)) {
        throw InvalidArgument("scene_init: need radius > min_radius >= 0 and z_max >= z_min");
    }
    Eigen::AlignedBox2d box;
    for (const auto& p : poses) {
        box.extend(p.translation.head<2>() - Eigen::Vector2d::Constant(o.radius));
        box.extend(p.translation.head<2>() + Eigen::Vector2d::Constant(o.radius));
    }
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> ux(box.min().x(), box.max().x());
    std::uniform_real_distribution<double> uy(box.min().y(), box.max().y());
    std::uniform_real_distribution<double> uz(o.z_min, o.z_max);

    GaussianScene scene;
    scene.s_max = o.s_max;
    scene.log_transmit_scale = std::log(cfg.transmit_scale * cfg.range_resolution * cfg.azimuth_step_rad());
    scene.gaussians.reserve(o.count);
    while (scene.gaussians.size() < o.count) {
        const Eigen::Vector2d xy(ux(rng), uy(rng));
        const bool inside = std::any_of(poses.begin(), poses.end(), [&](const Pose& p) {
            const double d = (xy - p.translation.head<2>()).norm();
            return d >= o.min_radius && d <= o.radius;
        });
        if (!inside) continue;
        const double z = o.z_max > o.z_min ? uz(rng) : o.z_min;
        scene.gaussians.push_back(Gaussian::make({xy.x(), xy.y(), z}, o.size, o.alpha, o.eta, o.a0));
    }
    return scene;
}

}  // namespace polarsplat
