#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "polarsplat/pipeline.hpp"

using namespace polarsplat;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << "polarsplat: " << msg << '\n'; }

Json number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;

    RunConfig load() const {
        RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        if (seed) {
            c.seed = *seed;
            c.fit.train.seed = *seed;
            c.fit.init.seed = *seed;
        }
        return c;
    }
};

void add_common(CLI::App* app, Common& common) {
    app->add_option("--config", common.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", common.seed, "Seed for every random choice");
}

std::vector<RadarFrame> load_sequence(const fs::path& dir) {
    std::vector<RadarFrame> frames = load_frames(dir);
    if (frames.empty()) {
        throw UsageError("no frame_*.png files in '" + dir.string() + "'");
    }
    return frames;
}

fs::path report_path(const fs::path& dir, std::size_t i) { return dir / (frame_stem(i) + ".report.json"); }

void write_reports(const fs::path& dir, const std::vector<NoiseReport>& reports) {
    for (std::size_t i = 0; i < reports.size(); ++i) write_json(report_path(dir, i), to_json(reports[i]));
}

Json report_summary(const std::vector<NoiseReport>& reports) {
    std::size_t sat = 0, mp = 0, flagged = 0;
    Json per = Json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        sat += reports[i].saturated.size();
        mp += reports[i].multipath.size();
        flagged += reports[i].empty() ? 0 : 1;
        Json beams = Json::array();
        for (auto b : reports[i].noisy_beams()) beams.push_back(b);
        per.push_back({{"frame", i}, {"noisy_beams", beams}});
    }
    return Json{{"frames", reports.size()},
                {"frames_with_noise", flagged},
                {"saturated_beams", sat},
                {"multipath_beams", mp},
                {"per_frame", per}};
}

int cmd_synth(const Common& common, const std::string& scene_path, const std::string& out, std::optional<std::size_t> frames,
              bool clean_only) {
    RunConfig c = common.load();
    if (frames) c.synth.trajectory.frames = *frames;
    if (clean_only) c.synth.noise.enabled = false;
    c.validate();
    const SceneSpec spec = scene_spec_from_json(read_json(scene_path));
    const std::vector<Pose> poses = c.synth.trajectory.poses();
    const AntennaGains gains(c.radar);
    const fs::path dir(out);
    Json injected = Json::array();
    std::size_t n_sat = 0, n_mp = 0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const RadarFrame clean =
            simulate_frame(spec, poses[i], c.radar, gains, static_cast<double>(i) * c.synth.frame_interval);
        save_frame(dir / "clean", i, clean);
        if (!c.synth.noise.enabled) continue;
        InjectionRecord rec;
        const RadarFrame noisy = inject_noise(clean, c.synth.noise, c.seed * 1000003ULL + i, &rec);
        save_frame(dir / "noisy", i, noisy);
        Json mp = Json::array();
        for (std::size_t k = 0; k < rec.multipath.size(); ++k) {
            mp.push_back({{"beam", rec.multipath[k]}, {"source_bin", rec.multipath_bins[k]}});
        }
        injected.push_back({{"frame", i}, {"saturated", rec.saturated}, {"multipath", mp}});
        n_sat += rec.saturated.size();
        n_mp += rec.multipath.size();
    }
    write_json(dir / "scene.json", to_json(spec));
    write_json(dir / "config.json", to_json(c));
    if (c.synth.noise.enabled) write_json(dir / "injected.json", injected);
    log("wrote " + std::to_string(poses.size()) + " frames to " + dir.string());
    std::cout << Json{{"frames", poses.size()},
                      {"clean", (dir / "clean").string()},
                      {"noisy", c.synth.noise.enabled ? Json((dir / "noisy").string()) : Json(nullptr)},
                      {"injected_saturated", n_sat},
                      {"injected_multipath", n_mp}}
                     .dump(2)
              << '\n';
    return 0;
}

int cmd_detect(const Common& common, const std::string& in, const std::string& out) {
    const RunConfig c = common.load();
    const std::vector<RadarFrame> frames = load_sequence(in);
    std::vector<NoiseReport> reports;
    for (const auto& f : frames) reports.push_back(detect_noise(f, c.noise));
    fs::create_directories(out);
    write_reports(out, reports);
    std::cout << report_summary(reports).dump(2) << '\n';
    return 0;
}

int cmd_denoise(const Common& common, const std::string& in, const std::string& out) {
    const RunConfig c = common.load();
    const std::vector<RadarFrame> raw = load_sequence(in);
    const DenoisedSequence seq = denoise_sequence(raw, c);
    const fs::path dir(out);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) save_frame(dir, i, seq.frames[i]);
    write_reports(dir, seq.reports);
    write_json(dir / "source_map.json", to_json(seq.source_map));
    Json summary = report_summary(seq.reports);
    summary["multipath_sources"] = seq.source_map.sources.size();
    summary["source_map"] = {{"detections", seq.stats.detections}, {"skipped", seq.stats.skipped}, {"merged", seq.stats.merged}};
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_occupancy(const Common& common, const std::string& in, const std::string& out, std::optional<std::size_t> window,
                  std::optional<double> pth) {
    RunConfig c = common.load();
    if (window) c.occupancy.window = *window;
    if (pth) c.occupancy.options.p_th = *pth;
    c.validate();
    const std::vector<RadarFrame> frames = load_sequence(in);
    const fs::path dir(out);
    std::vector<std::size_t> all(frames.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const std::vector<Image> polar = occupancy_targets(frames, all, c.occupancy);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        RadarFrame f = frames[i];
        f.power = polar[i];
        save_frame(dir / "polar", i, f);
    }
    const OccupancyGrid global = build_occupancy(frames, c.occupancy.options);
    save_occupancy(dir / "occupancy.png", global);
    std::cout << Json{{"frames", frames.size()},
                      {"window", c.occupancy.window},
                      {"p_th", c.occupancy.options.p_th},
                      {"cell_size", global.cell_size},
                      {"width", global.width()},
                      {"height", global.height()},
                      {"occupied_cells", global.occupied()}}
                     .dump(2)
              << '\n';
    return 0;
}

DenoisedSequence load_fit_inputs(const fs::path& dir) {
    DenoisedSequence seq;
    seq.frames = load_sequence(dir);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const fs::path p = report_path(dir, i);
        seq.reports.push_back(fs::exists(p) ? noise_report_from_json(read_json(p)) : NoiseReport{});
    }
    if (fs::exists(dir / "source_map.json")) seq.source_map = source_map_from_json(read_json(dir / "source_map.json"));
    return seq;
}

int cmd_fit(const Common& common, const std::string& in, const std::string& out, std::optional<std::size_t> iterations,
            const std::string& resume) {
    RunConfig c = common.load();
    if (iterations) c.fit.train.iterations = *iterations;
    c.validate();
    const DenoisedSequence seq = load_fit_inputs(in);
    const RadarConfig& radar = seq.frames.front().config;
    for (const auto& f : seq.frames) {
        if (f.power.rows() != seq.frames.front().power.rows() || f.power.cols() != seq.frames.front().power.cols()) {
            throw UsageError("frames in '" + in + "' have mixed sizes");
        }
    }
    const std::vector<std::size_t> train_idx = training_indices(seq.frames.size(), c.fit.holdout_every);
    if (train_idx.empty()) throw UsageError("no training frames left after the holdout split");
    const std::vector<FrameTarget> targets = make_targets(seq, train_idx, c);
    log("prepared " + std::to_string(targets.size()) + " training targets");

    GaussianScene scene;
    if (!resume.empty()) {
        scene = load_checkpoint(resume);
    } else {
        std::vector<Pose> poses;
        for (const auto& t : targets) poses.push_back(t.pose);
        scene = scene_init(poses, radar, c.fit.init);
    }
    scene.s_max = c.fit.train.s_max;
    const Renderer renderer(radar, AntennaGains(radar), c.render);

    const fs::path dir(out);
    fs::create_directories(dir);
    std::ofstream csv(dir / "loss.csv");
    if (!csv) throw IoError("cannot write '" + (dir / "loss.csv").string() + "'");
    csv << "iteration,total,l1,ssim,occ,size,reg\n";
    csv.precision(10);
    TrainConfig tc = c.fit.train;
    const auto t0 = std::chrono::steady_clock::now();
    tc.on_iteration = [&](std::size_t it, const LossTerms& t) {
        csv << it << ',' << t.total << ',' << t.l1 << ',' << t.ssim << ',' << t.occ << ',' << t.size << ',' << t.reg << '\n';
        if (c.fit.log_every > 0 && it % c.fit.log_every == 0) {
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            log("iteration " + std::to_string(it) + " loss " + std::to_string(t.total) + " (" + std::to_string(s) + " s)");
        }
    };
    if (tc.checkpoint_every > 0) {
        tc.on_checkpoint = [&](const GaussianScene& s, std::size_t it) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint_%06zu.json", it);
            save_checkpoint(dir / "checkpoints" / name, s);
        };
    }
    const TrainResult result = optimize(scene, targets, renderer, tc);
    csv.close();
    save_checkpoint(dir / "checkpoint.json", scene);

    double train_psnr = 0.0;
    for (const auto& t : targets) {
        Image r = renderer.render(scene, t.pose, RenderMode::Sigma);
        r = t.multipath ? compose_final(r, *t.multipath) : r.cwiseMax(0.0).cwiseMin(1.0);
        train_psnr += psnr(r, t.gt, radar.first_valid_bin());
    }
    train_psnr /= static_cast<double>(targets.size());
    const std::vector<std::size_t> held = holdout_indices(seq.frames.size(), c.fit.holdout_every);
    write_json(dir / "holdout.json", Json{{"holdout", held}, {"training", train_idx}});
    write_json(dir / "config.json", to_json(c));
    std::cout << Json{{"iterations", result.history.size()},
                      {"final_loss", result.history.empty() ? Json(nullptr) : number(result.history.back().total)},
                      {"gaussians", scene.size()},
                      {"pruned", result.pruned},
                      {"training_frames", train_idx.size()},
                      {"holdout", held},
                      {"train_psnr", number(train_psnr)},
                      {"checkpoint", (dir / "checkpoint.json").string()}}
                     .dump(2)
              << '\n';
    return 0;
}

std::vector<double> parse_pose(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError("--pose expects x,y,yaw[,z], got '" + s + "'");
        }
    }
    if (v.size() < 3 || v.size() > 4) throw UsageError("--pose expects x,y,yaw[,z], got '" + s + "'");
    return v;
}

int cmd_render(const Common& common, const std::string& checkpoint, const std::string& frames_dir,
               const std::vector<std::string>& pose_specs, const std::string& mode_name, const std::string& map_path,
               bool cartesian, std::size_t cart_size, const std::string& out) {
    const RunConfig c = common.load();
    std::vector<RenderMode> modes;
    if (mode_name == "all") {
        modes = {RenderMode::Sigma, RenderMode::Alpha, RenderMode::RhoAlpha, RenderMode::RhoEta};
    } else {
        try {
            modes = {parse_render_mode(mode_name)};
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
    }
    if (frames_dir.empty() == pose_specs.empty()) throw UsageError("give exactly one of --frames or --pose");

    const GaussianScene scene = load_checkpoint(checkpoint);
    RadarConfig radar = c.radar;
    std::vector<Pose> poses;
    if (!frames_dir.empty()) {
        const std::vector<RadarFrame> frames = load_sequence(frames_dir);
        radar = frames.front().config;
        for (const auto& f : frames) poses.push_back(f.pose);
    } else {
        for (const auto& s : pose_specs) {
            const std::vector<double> v = parse_pose(s);
            poses.push_back(Pose::from_xy_yaw(v[0], v[1], v[2], v.size() > 3 ? v[3] : 0.0));
        }
    }
    std::optional<MultipathSourceMap> map;
    if (!map_path.empty()) map = source_map_from_json(read_json(map_path));

    const Renderer renderer(radar, AntennaGains(radar), c.render);
    const fs::path dir(out);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const std::vector<Image> imgs = renderer.render(scene, poses[i], modes);
        for (std::size_t m = 0; m < modes.size(); ++m) {
            RadarFrame f = RadarFrame::zeros(radar, poses[i], static_cast<double>(i));
            if (modes[m] == RenderMode::Sigma && map) {
                f.power = compose_final(imgs[m], render_multipath(*map, poses[i], radar, c.multipath));
            } else {
                f.power = imgs[m].cwiseMax(0.0).cwiseMin(1.0);
            }
            const fs::path sub = dir / to_string(modes[m]);
            save_frame(sub, i, f);
            if (cartesian) {
                char name[32];
                std::snprintf(name, sizeof name, "cart_%04zu.png", i);
                write_png8(sub / name, polar_to_cartesian(f.power, radar, cart_size));
            }
        }
    }
    Json mode_names = Json::array();
    for (auto m : modes) mode_names.push_back(to_string(m));
    std::cout << Json{{"poses", poses.size()}, {"modes", mode_names}, {"cartesian", cartesian}, {"out", dir.string()}}.dump(2)
              << '\n';
    return 0;
}

enum class InputKind { Frames, Occupancy, Scene };

struct EvalInput {
    InputKind kind;
    std::vector<RadarFrame> frames;
    OccupancyGrid grid;
    SceneSpec scene;
};

EvalInput load_eval_input(const fs::path& p) {
    EvalInput in;
    if (fs::is_directory(p)) {
        in.kind = InputKind::Frames;
        in.frames = load_sequence(p);
        return in;
    }
    if (p.extension() == ".json") {
        in.kind = InputKind::Scene;
        in.scene = scene_spec_from_json(read_json(p));
        return in;
    }
    fs::path side = p;
    side.replace_extension(".json");
    const Json meta = read_json(side);
    if (meta.contains("cell_size")) {
        in.kind = InputKind::Occupancy;
        in.grid = load_occupancy(p);
    } else {
        in.kind = InputKind::Frames;
        in.frames.push_back(load_frame(p));
    }
    return in;
}

PointSet2D eval_points(const EvalInput& in, const RunConfig& c, const std::vector<Pose>& poses) {
    switch (in.kind) {
        case InputKind::Frames:
            return occupancy_to_points(build_occupancy(in.frames, c.occupancy.options));
        case InputKind::Occupancy:
            return occupancy_to_points(in.grid);
        case InputKind::Scene:
            if (poses.empty()) return scene_ground_truth(in.scene, c.eval.gt_spacing);
            return ground_truth_in_range(in.scene, poses, c.radar.max_range, c.eval.gt_spacing);
    }
    return {};
}

int cmd_eval(const Common& common, const std::string& pred_path, const std::string& gt_path, std::optional<double> tau,
             std::optional<double> pth) {
    RunConfig c = common.load();
    if (tau) c.eval.tau = *tau;
    if (pth) c.occupancy.options.p_th = *pth;
    c.validate();
    const EvalInput pred = load_eval_input(pred_path);
    const EvalInput gt = load_eval_input(gt_path);
    if (pred.kind == InputKind::Scene) throw UsageError("--pred cannot be a scene description");

    Json out{{"tau", c.eval.tau}, {"psnr", nullptr}, {"ssim", nullptr}};
    Json per = Json::array();
    if (pred.kind == InputKind::Frames && gt.kind == InputKind::Frames) {
        if (pred.frames.size() != gt.frames.size()) {
            throw UsageError("--pred has " + std::to_string(pred.frames.size()) + " frames, --gt has " +
                             std::to_string(gt.frames.size()));
        }
        double sum_psnr = 0.0, sum_ssim = 0.0;
        for (std::size_t i = 0; i < pred.frames.size(); ++i) {
            const Image& a = pred.frames[i].power;
            const Image& b = gt.frames[i].power;
            if (a.rows() != b.rows() || a.cols() != b.cols()) {
                throw UsageError("frame " + std::to_string(i) + " sizes differ");
            }
            const std::size_t first = gt.frames[i].config.first_valid_bin();
            const double p = psnr(a, b, first);
            const double s = ssim(a, b, first);
            sum_psnr += p;
            sum_ssim += s;
            per.push_back({{"frame", i}, {"psnr", number(p)}, {"ssim", s}});
        }
        const auto n = static_cast<double>(pred.frames.size());
        out["psnr"] = number(sum_psnr / n);
        out["ssim"] = sum_ssim / n;
    }
    std::vector<Pose> poses;
    for (const auto& f : pred.frames) poses.push_back(f.pose);
    const PointSet2D p = eval_points(pred, c, poses);
    const PointSet2D q = eval_points(gt, c, poses);
    out["n_points_pred"] = p.size();
    out["n_points_gt"] = q.size();
    for (const char* key : {"rmse", "cd", "rcd", "accuracy", "precision", "recall"}) out[key] = nullptr;
    if (p.empty() || q.empty()) {
        log("geometry metrics skipped: " + std::string(p.empty() ? "prediction" : "ground truth") + " has no occupied points");
    } else {
        const MatchScores m = accuracy_precision_recall(p, q, c.eval.tau);
        out["rmse"] = geometry_rmse(p, q);
        out["cd"] = chamfer(p, q);
        try {
            out["rcd"] = relative_chamfer(p, q);
        } catch (const DegenerateGroundTruth&) {
        }
        out["accuracy"] = m.accuracy;
        out["precision"] = m.precision;
        out["recall"] = m.recall;
    }
    out["per_frame"] = per;
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radar Gaussian splatting: synthesis, denoising, occupancy, fitting, rendering, evaluation"};
    app.require_subcommand(1);
    Common common;

    std::string scene_path, in, out, checkpoint, frames_dir, map_path, resume, pred, gt, mode = "sigma";
    std::optional<std::size_t> frames, window, iterations;
    std::optional<double> pth, tau;
    std::vector<std::string> pose_specs;
    bool clean_only = false, cartesian = false;
    std::size_t cart_size = 512;

    auto* synth = app.add_subcommand("synth", "Simulate clean and noisy frame sequences from a scene description");
    add_common(synth, common);
    synth->add_option("--scene", scene_path, "Scene JSON")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--frames", frames, "Number of poses along the trajectory");
    synth->add_flag("--clean", clean_only, "Skip noise injection");

    auto* detect = app.add_subcommand("detect", "Classify saturated and multipath beams");
    add_common(detect, common);
    detect->add_option("--in", in, "Frame directory")->required()->check(CLI::ExistingDirectory);
    detect->add_option("--out", out, "Report directory")->required();

    auto* denoise = app.add_subcommand("denoise", "Detect, denoise and build the multipath source map");
    add_common(denoise, common);
    denoise->add_option("--in", in, "Frame directory")->required()->check(CLI::ExistingDirectory);
    denoise->add_option("--out", out, "Output directory")->required();

    auto* occupancy = app.add_subcommand("occupancy", "Windowed occupancy targets and a global BEV grid");
    add_common(occupancy, common);
    occupancy->add_option("--in", in, "Frame directory")->required()->check(CLI::ExistingDirectory);
    occupancy->add_option("--out", out, "Output directory")->required();
    occupancy->add_option("--window", window, "Frames per window")->check(CLI::PositiveNumber);
    occupancy->add_option("--pth", pth, "Occupancy power threshold")->check(CLI::Range(0.0, 1.0));

    auto* fit = app.add_subcommand("fit", "Optimize a Gaussian scene against a (denoised) frame sequence");
    add_common(fit, common);
    fit->add_option("--in", in, "Frame directory, optionally with reports and source_map.json")
        ->required()
        ->check(CLI::ExistingDirectory);
    fit->add_option("--out", out, "Output directory")->required();
    fit->add_option("--iterations", iterations, "Override train.iterations");
    fit->add_option("--resume", resume, "Start from this checkpoint")->check(CLI::ExistingFile);

    auto* render = app.add_subcommand("render", "Render a fitted scene at frame poses or explicit poses");
    add_common(render, common);
    render->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
    render->add_option("--frames", frames_dir, "Render at the poses of these frames")->check(CLI::ExistingDirectory);
    render->add_option("--pose", pose_specs, "x,y,yaw[,z] (repeatable)");
    render->add_option("--mode", mode, "sigma, alpha, rho_alpha, rho_eta or all");
    render->add_option("--multipath", map_path, "Source map JSON composed onto sigma renders")->check(CLI::ExistingFile);
    render->add_flag("--cartesian", cartesian, "Also write top-down PNGs");
    render->add_option("--cartesian-size", cart_size, "Top-down PNG size in pixels")->check(CLI::PositiveNumber);
    render->add_option("--out", out, "Output directory")->required();

    auto* eval = app.add_subcommand("eval", "Image and geometry metrics between predictions and ground truth");
    add_common(eval, common);
    eval->add_option("--pred", pred, "Frame directory, frame PNG or occupancy PNG")->required()->check(CLI::ExistingPath);
    eval->add_option("--gt", gt, "Frame directory, frame PNG, occupancy PNG or scene JSON")->required()->check(CLI::ExistingPath);
    eval->add_option("--tau", tau, "Match distance in meters")->check(CLI::PositiveNumber);
    eval->add_option("--pth", pth, "Occupancy threshold for frame inputs")->check(CLI::Range(0.0, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(common, scene_path, out, frames, clean_only);
        if (detect->parsed()) return cmd_detect(common, in, out);
        if (denoise->parsed()) return cmd_denoise(common, in, out);
        if (occupancy->parsed()) return cmd_occupancy(common, in, out, window, pth);
        if (fit->parsed()) return cmd_fit(common, in, out, iterations, resume);
        if (render->parsed()) return cmd_render(common, checkpoint, frames_dir, pose_specs, mode, map_path, cartesian, cart_size, out);
        if (eval->parsed()) return cmd_eval(common, pred, gt, tau, pth);
    } catch (const ConfigError& e) {
        log(e.what());
        return 2;
    } catch (const UsageError& e) {
        log(e.what());
        return 2;
    } catch (const DimensionMismatch& e) {
        log(e.what());
        return 2;
    } catch (const std::exception& e) {
        log(e.what());
        return 1;
    }
    return 2;
}
