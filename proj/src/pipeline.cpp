#include "psdet/pipeline.hpp"

#include "psdet/depthcode.hpp"
#include "psdet/spatial.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace psdet {

namespace {

const std::set<std::string> kTopKeys = {"scene", "preset", "frames", "keyframes", "min_box_pixels", "depth",
                                        "scatter", "surface", "voxel_size_ps", "voxel_size_gs", "nms_iou",
                                        "nms_cross_category", "detector", "eval", "seed", "noise_sigma",
                                        "outlier_rate", "output_dir"};

void check_keys(const json &j, const std::set<std::string> &allowed, const std::string &where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto &[key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json &j, const char *key, T &out, const std::string &where) {
    if (!j.contains(key)) return;
    const json &v = j.at(key);
    bool ok = true;
    if constexpr (std::is_same_v<T, bool>)
        ok = v.is_boolean();
    else if constexpr (std::is_unsigned_v<T>)
        ok = v.is_number_unsigned();
    else if constexpr (std::is_integral_v<T>)
        ok = v.is_number_integer();
    else if constexpr (std::is_floating_point_v<T>)
        ok = v.is_number();
    else if constexpr (std::is_same_v<T, std::string>)
        ok = v.is_string();
    if (!ok) throw ConfigError(where + "." + key + ": wrong type");
    try {
        out = v.get<T>();
    } catch (const json::exception &) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

std::string mode_name(DetectorMode m) { return m == DetectorMode::GtPassthrough ? "gt_passthrough" : "score_cluster"; }

std::string distance_mode_name(DistanceMode m) { return m == DistanceMode::Squared ? "squared" : "unsquared"; }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

template <typename F>
auto stage(const char *name, F &&body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError &) {
        throw;
    } catch (const std::exception &e) {
        throw StageError(name, e.what());
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double occlusion_tolerance(const PipelineConfig &config, const SceneSpec &scene) {
    return std::max(3.0 * scene.depth_noise_sigma, config.occlusion_tolerance_floor);
}

std::vector<CameraFrame> render_all(const SceneSpec &scene, double min_box_pixels) {
    std::vector<CameraFrame> frames;
    frames.reserve(scene.cameras.size());
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) frames.push_back(render_frame(scene, i, min_box_pixels));
    return frames;
}

std::vector<std::size_t> choose_keyframes(const PipelineConfig &config, const std::vector<CameraFrame> &frames) {
    std::vector<Posed> poses;
    std::vector<int> counts;
    for (const auto &f : frames) {
        poses.push_back(f.pose);
        counts.push_back(static_cast<int>(f.boxes2d.size()));
    }
    KeyframeCriteria criteria = config.keyframes;
    criteria.target_count = config.frames;
    return select_keyframes(poses, counts, criteria);
}

struct DepthStats {
    std::size_t pixels = 0;
    double ordinal_loss = 0.0;
    double l1 = 0.0;
    double total = 0.0;
};

// Stand-in for the depth network: ordinal probabilities peaked at the
// perturbed depth, then residual refinement back onto it.
DepthStats simulate_depth_head(const DepthMap &gt, const DepthMap &noisy, const DepthBins &bins) {
    std::vector<Eigen::Index> pixels;
    for (Eigen::Index i = 0; i < gt.size(); ++i)
        if (gt.data()[i] > 0) pixels.push_back(i);
    DepthStats stats;
    if (pixels.empty()) return stats;
    const auto n = static_cast<Eigen::Index>(pixels.size());
    const double slope = 0.25 * bins.width();
    Eigen::MatrixXd probs(n, bins.count());
    std::vector<int> labels(pixels.size());
    std::vector<double> coarse(pixels.size()), residual(pixels.size()), truth(pixels.size());
    for (Eigen::Index r = 0; r < n; ++r) {
        const double d = noisy.data()[pixels[static_cast<std::size_t>(r)]];
        for (int j = 0; j < bins.count(); ++j) probs(r, j) = 1.0 / (1.0 + std::exp(-(d - bins.edge(j + 1)) / slope));
        const auto k = static_cast<std::size_t>(r);
        truth[k] = gt.data()[pixels[k]];
        labels[k] = encode_label(truth[k], bins);
        coarse[k] = decode_depth(probs.row(r).transpose(), bins);
        residual[k] = d - coarse[k];
    }
    stats.pixels = pixels.size();
    stats.ordinal_loss = ordinal_loss(probs, labels);
    stats.total = depth_loss(probs, labels, coarse, residual, truth);
    stats.l1 = stats.total - stats.ordinal_loss;
    return stats;
}

json report_json(const SparsityReport &r) { return sparsity_to_json(r); }

Eigen::Vector3d grid_origin(const SceneSpec &scene) { return scene.bounds().min(); }

}  // namespace

void PipelineConfig::validate() const {
    if (scene_path.empty() && preset != "demo" && preset != "room")
        throw ConfigError("preset must be 'demo' or 'room'");
    if (frames < 1) throw ConfigError("frames must be >= 1");
    if (!(keyframes.min_translation >= 0) || !(keyframes.min_rotation_deg >= 0))
        throw ConfigError("keyframe motion thresholds must be non-negative");
    if (!(min_box_pixels >= 0)) throw ConfigError("min_box_pixels must be non-negative");
    if (!(depth_min > 0 && depth_max > depth_min) || depth_bins < 1) throw ConfigError("invalid depth range or bins");
    if (!(tau > 0) || !(gamma >= 0) || !(k_sigma > 0)) throw ConfigError("tau and k_sigma must be positive, gamma >= 0");
    if (!(score_threshold >= 0 && score_threshold <= 1)) throw ConfigError("surface threshold must lie in [0,1]");
    if (!(occlusion_tolerance_floor >= 0)) throw ConfigError("occlusion tolerance must be non-negative");
    if (!(voxel_size_ps > 0) || !(voxel_size_gs > 0)) throw ConfigError("voxel sizes must be positive");
    if (!(nms_iou >= 0 && nms_iou <= 1)) throw ConfigError("nms_iou must lie in [0,1]");
    if (!(detector.cluster_eps > 0)) throw ConfigError("detector.cluster_eps must be positive");
    if (noise_sigma && !(*noise_sigma >= 0)) throw ConfigError("noise_sigma must be non-negative");
    if (outlier_rate && !(*outlier_rate >= 0 && *outlier_rate <= 1)) throw ConfigError("outlier_rate must lie in [0,1]");
    try {
        scatter.validate();
        eval.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
}

PipelineConfig config_from_json(const json &j) {
    PipelineConfig c;
    check_keys(j, kTopKeys, "config");
    read(j, "scene", c.scene_path, "config");
    read(j, "preset", c.preset, "config");
    read(j, "frames", c.frames, "config");
    read(j, "min_box_pixels", c.min_box_pixels, "config");
    if (j.contains("keyframes")) {
        const json &k = j["keyframes"];
        check_keys(k, {"min_translation", "min_rotation_deg"}, "keyframes");
        read(k, "min_translation", c.keyframes.min_translation, "keyframes");
        read(k, "min_rotation_deg", c.keyframes.min_rotation_deg, "keyframes");
    }
    if (j.contains("depth")) {
        const json &d = j["depth"];
        check_keys(d, {"min", "max", "bins"}, "depth");
        read(d, "min", c.depth_min, "depth");
        read(d, "max", c.depth_max, "depth");
        read(d, "bins", c.depth_bins, "depth");
    }
    if (j.contains("scatter")) {
        const json &s = j["scatter"];
        check_keys(s, {"radius", "max_points"}, "scatter");
        read(s, "radius", c.scatter.radius, "scatter");
        read(s, "max_points", c.scatter.max_points, "scatter");
    }
    if (j.contains("surface")) {
        const json &s = j["surface"];
        check_keys(s, {"tau", "gamma", "k_sigma", "threshold", "occlusion_check", "occlusion_tolerance"}, "surface");
        read(s, "tau", c.tau, "surface");
        read(s, "gamma", c.gamma, "surface");
        read(s, "k_sigma", c.k_sigma, "surface");
        read(s, "threshold", c.score_threshold, "surface");
        read(s, "occlusion_check", c.occlusion_check, "surface");
        read(s, "occlusion_tolerance", c.occlusion_tolerance_floor, "surface");
    }
    read(j, "voxel_size_ps", c.voxel_size_ps, "config");
    read(j, "voxel_size_gs", c.voxel_size_gs, "config");
    read(j, "nms_iou", c.nms_iou, "config");
    read(j, "nms_cross_category", c.nms_cross_category, "config");
    if (j.contains("detector")) {
        const json &d = j["detector"];
        check_keys(d, {"mode", "cluster_eps", "min_cluster_points"}, "detector");
        std::string mode = mode_name(c.detector.mode);
        read(d, "mode", mode, "detector");
        if (mode == "gt_passthrough")
            c.detector.mode = DetectorMode::GtPassthrough;
        else if (mode == "score_cluster")
            c.detector.mode = DetectorMode::ScoreCluster;
        else
            throw ConfigError("detector.mode must be 'gt_passthrough' or 'score_cluster'");
        read(d, "cluster_eps", c.detector.cluster_eps, "detector");
        read(d, "min_cluster_points", c.detector.min_cluster_points, "detector");
    }
    if (j.contains("eval")) {
        const json &e = j["eval"];
        check_keys(e, {"iou_thresholds", "fscore_threshold", "fscore_mode", "sample_count", "recon_iou"}, "eval");
        read(e, "iou_thresholds", c.eval.iou_thresholds, "eval");
        read(e, "fscore_threshold", c.eval.fscore_threshold, "eval");
        std::string mode = distance_mode_name(c.eval.fscore_mode);
        read(e, "fscore_mode", mode, "eval");
        if (mode == "squared")
            c.eval.fscore_mode = DistanceMode::Squared;
        else if (mode == "unsquared")
            c.eval.fscore_mode = DistanceMode::Unsquared;
        else
            throw ConfigError("eval.fscore_mode must be 'squared' or 'unsquared'");
        read(e, "sample_count", c.eval.sample_count, "eval");
        read(e, "recon_iou", c.eval.recon_iou, "eval");
    }
    if (j.contains("seed")) {
        std::uint64_t seed = 0;
        read(j, "seed", seed, "config");
        c.seed = seed;
    }
    if (j.contains("noise_sigma")) {
        double v = 0;
        read(j, "noise_sigma", v, "config");
        c.noise_sigma = v;
    }
    if (j.contains("outlier_rate")) {
        double v = 0;
        read(j, "outlier_rate", v, "config");
        c.outlier_rate = v;
    }
    read(j, "output_dir", c.output_dir, "config");
    c.validate();
    return c;
}

json config_to_json(const PipelineConfig &c) {
    json j;
    j["scene"] = c.scene_path;
    j["preset"] = c.preset;
    j["frames"] = c.frames;
    j["keyframes"] = {{"min_translation", c.keyframes.min_translation},
                      {"min_rotation_deg", c.keyframes.min_rotation_deg}};
    j["min_box_pixels"] = c.min_box_pixels;
    j["depth"] = {{"min", c.depth_min}, {"max", c.depth_max}, {"bins", c.depth_bins}};
    j["scatter"] = {{"radius", c.scatter.radius}, {"max_points", c.scatter.max_points}};
    j["surface"] = {{"tau", c.tau},
                    {"gamma", c.gamma},
                    {"k_sigma", c.k_sigma},
                    {"threshold", c.score_threshold},
                    {"occlusion_check", c.occlusion_check},
                    {"occlusion_tolerance", c.occlusion_tolerance_floor}};
    j["voxel_size_ps"] = c.voxel_size_ps;
    j["voxel_size_gs"] = c.voxel_size_gs;
    j["nms_iou"] = c.nms_iou;
    j["nms_cross_category"] = c.nms_cross_category;
    j["detector"] = {{"mode", mode_name(c.detector.mode)},
                     {"cluster_eps", c.detector.cluster_eps},
                     {"min_cluster_points", c.detector.min_cluster_points}};
    j["eval"] = {{"iou_thresholds", c.eval.iou_thresholds},
                 {"fscore_threshold", c.eval.fscore_threshold},
                 {"fscore_mode", distance_mode_name(c.eval.fscore_mode)},
                 {"sample_count", c.eval.sample_count},
                 {"recon_iou", c.eval.recon_iou}};
    if (c.seed) j["seed"] = *c.seed;
    if (c.noise_sigma) j["noise_sigma"] = *c.noise_sigma;
    if (c.outlier_rate) j["outlier_rate"] = *c.outlier_rate;
    j["output_dir"] = c.output_dir;
    return j;
}

std::uint64_t split_seed(std::uint64_t root, std::string_view label, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char ch : label) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
    }
    return splitmix64(splitmix64(root ^ h) + index);
}

SceneSpec resolve_scene(const PipelineConfig &config) {
    SceneSpec scene;
    if (!config.scene_path.empty()) {
        try {
            scene = scene_from_json(read_json(config.scene_path));
        } catch (const std::exception &e) {
            throw ConfigError(std::string("scene: ") + e.what());
        }
    } else if (config.preset == "demo") {
        scene = demo_scene();
    } else if (config.preset == "room") {
        scene = room_scene();
    } else {
        throw ConfigError("unknown preset '" + config.preset + "'");
    }
    if (config.noise_sigma) scene.depth_noise_sigma = *config.noise_sigma;
    if (config.outlier_rate) scene.outlier_rate = *config.outlier_rate;
    try {
        scene.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(std::string("scene: ") + e.what());
    }
    return scene;
}

std::vector<std::vector<std::size_t>> cluster_points(const std::vector<Eigen::Vector3d> &points, double eps) {
    if (!(eps > 0)) throw std::invalid_argument("cluster_points: eps must be positive");
    HashGrid grid(eps);
    for (const auto &p : points) grid.insert(p);
    std::vector<int> component(points.size(), -1);
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t seed = 0; seed < points.size(); ++seed) {
        if (component[seed] >= 0) continue;
        const int id = static_cast<int>(clusters.size());
        clusters.emplace_back();
        std::vector<std::size_t> queue{seed};
        component[seed] = id;
        while (!queue.empty()) {
            const std::size_t i = queue.back();
            queue.pop_back();
            clusters.back().push_back(i);
            for (std::size_t n : grid.radius_search(points[i], eps)) {
                if (component[n] >= 0) continue;
                component[n] = id;
                queue.push_back(n);
            }
        }
        std::sort(clusters.back().begin(), clusters.back().end());
    }
    return clusters;
}

std::vector<OrientedBox> detect(const OracleDetector &detector, const ScatterCloud &cloud, const SceneSpec &scene,
                                double score_threshold) {
    std::vector<OrientedBox> out;
    if (detector.mode == DetectorMode::GtPassthrough) {
        out = scene.gt_boxes();
        for (auto &b : out) b.score = 1.0;
        return out;
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.scores.size() == 0 || cloud.scores(static_cast<Eigen::Index>(i)) >= score_threshold) kept.push_back(i);
    std::vector<Eigen::Vector3d> pts;
    for (std::size_t i : kept) pts.push_back(cloud.points[i].position);
    constexpr double kMinExtent = 0.01;
    for (const auto &members : cluster_points(pts, detector.cluster_eps)) {
        if (members.size() < detector.min_cluster_points) continue;
        Eigen::AlignedBox3d aabb;
        std::map<int, std::size_t> votes;
        double score = 0.0;
        for (std::size_t m : members) {
            const std::size_t i = kept[m];
            aabb.extend(cloud.points[i].position);
            if (cloud.points[i].source_box_category >= 0) ++votes[cloud.points[i].source_box_category];
            score += cloud.scores.size() ? cloud.scores(static_cast<Eigen::Index>(i)) : 1.0;
        }
        if (votes.empty()) continue;
        int category = votes.begin()->first;
        for (const auto &[c, n] : votes)
            if (n > votes[category]) category = c;
        OrientedBox box;
        box.center = aabb.center();
        box.size = aabb.sizes().cwiseMax(kMinExtent);
        box.yaw = 0.0;
        box.category = category;
        box.score = score / static_cast<double>(members.size());
        out.push_back(box);
    }
    return out;
}

ReconstructionMetrics evaluate_reconstruction(const std::vector<OrientedBox> &detections, const SceneSpec &scene,
                                              const EvalConfig &config, std::uint64_t seed) {
    ReconstructionMetrics m;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        int best = -1;
        double best_iou = config.recon_iou;
        for (std::size_t g = 0; g < scene.objects.size(); ++g) {
            if (scene.objects[g].category() != detections[d].category) continue;
            const double iou = iou_3d(detections[d], scene.objects[g].box);
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best < 0) continue;
        const auto pred = sample_surface(box_mesh(detections[d]), config.sample_count, split_seed(seed, "recon_pred", d));
        const auto gt = sample_surface(scene.objects[static_cast<std::size_t>(best)].surface_mesh, config.sample_count,
                                       split_seed(seed, "recon_gt", d));
        m.chamfer += chamfer(gt, pred);
        m.fscore += fscore(gt, pred, config.fscore_threshold, config.fscore_mode);
        ++m.evaluated;
    }
    if (m.evaluated) {
        m.chamfer /= static_cast<double>(m.evaluated);
        m.fscore /= static_cast<double>(m.evaluated);
    }
    return m;
}

PipelineResult run_pipeline(const PipelineConfig &config) {
    config.validate();
    return run_pipeline(config, resolve_scene(config));
}

PipelineResult run_pipeline(const PipelineConfig &config, const SceneSpec &scene) {
    config.validate();
    PipelineResult r;
    r.scene = scene;
    const std::uint64_t root = config.seed.value_or(scene.rng_seed);
    const int K = scene.category_count();

    auto all_frames = stage("render", [&] { return render_all(scene, config.min_box_pixels); });
    r.keyframes = stage("keyframes", [&] { return choose_keyframes(config, all_frames); });

    const DepthBins bins(config.depth_min, config.depth_max, config.depth_bins);
    DepthStats depth_stats;
    stage("depth", [&] {
        for (std::size_t k : r.keyframes) {
            CameraFrame frame = all_frames[k];
            const DepthMap noisy = perturb_depth(frame.depth, scene.depth_noise_sigma, scene.outlier_rate,
                                                 config.depth_min, config.depth_max, split_seed(root, "depth", k));
            const DepthStats s = simulate_depth_head(frame.depth, noisy, bins);
            const double w = static_cast<double>(s.pixels);
            depth_stats.pixels += s.pixels;
            depth_stats.ordinal_loss += w * s.ordinal_loss;
            depth_stats.l1 += w * s.l1;
            frame.depth = noisy;
            r.frames.push_back(std::move(frame));
        }
        if (depth_stats.pixels) {
            depth_stats.ordinal_loss /= static_cast<double>(depth_stats.pixels);
            depth_stats.l1 /= static_cast<double>(depth_stats.pixels);
        }
        depth_stats.total = depth_stats.ordinal_loss + depth_stats.l1;
        return 0;
    });
    all_frames.clear();

    ScatterConfig scatter_config = config.scatter;
    scatter_config.rng_seed = split_seed(root, "scatter");
    ScatterCloud raw = stage("scatter", [&] {
        Scatterer scatterer(scatter_config);
        for (std::size_t i = 0; i < r.frames.size(); ++i)
            scatterer.scatter_frame(r.frames[i], static_cast<int>(r.keyframes[i]));
        return scatterer.release();
    });
    const std::size_t raw_count = raw.size();
    r.cloud = stage("cap", [&] { return cap_points(raw, scatter_config.max_points, split_seed(root, "cap")); });
    raw = {};

    stage("aggregate", [&] {
        AggregateOptions options;
        options.occlusion_check = config.occlusion_check;
        options.occlusion_tolerance = occlusion_tolerance(config, scene);
        aggregate_cloud(r.cloud, r.frames, K, options);
        return 0;
    });

    double focal = 0.0, outliers_before = 0.0, outliers_after = 0.0;
    std::size_t kept_count = 0;
    stage("surface", [&] {
        const auto positions = r.cloud.positions();
        const auto gt_surface = sample_gt_surface(scene.triangles(), config.tau, split_seed(root, "surface"));
        r.labeling = label_points(positions, gt_surface, config.tau);
        r.cloud.scores = photometric_score(r.cloud, config.k_sigma);
        if (!r.cloud.empty()) {
            focal = focal_loss(r.cloud.scores, r.labeling, config.gamma);
            outliers_before = r.labeling.outlier_fraction();
            std::size_t bad = 0;
            for (std::size_t i = 0; i < r.cloud.size(); ++i) {
                if (r.cloud.scores(static_cast<Eigen::Index>(i)) < config.score_threshold) continue;
                ++kept_count;
                if (!r.labeling.labels[i]) ++bad;
            }
            outliers_after = kept_count ? static_cast<double>(bad) / static_cast<double>(kept_count) : 0.0;
        }
        soft_weight(r.cloud);
        return 0;
    });

    stage("voxelize", [&] {
        r.sparsity_ps = sparsity_report(r.cloud, DenseGridSpec(scene.bounds(), config.voxel_size_ps));
        r.sparsity_gs = sparsity_report(r.cloud, DenseGridSpec(scene.bounds(), config.voxel_size_gs));
        return 0;
    });

    r.detections = stage("detect", [&] {
        auto raw_dets = detect(config.detector, r.cloud, scene, config.score_threshold);
        return nms(raw_dets, config.nms_iou, config.nms_cross_category);
    });

    stage("evaluate", [&] {
        const auto gts = scene.gt_boxes();
        const DetectionReport report = evaluate_detections(r.detections, gts, config.eval);
        const ReconstructionMetrics recon =
            evaluate_reconstruction(r.detections, scene, config.eval, split_seed(root, "eval"));

        json cfg = config_to_json(config);
        cfg.erase("output_dir");
        cfg["seed"] = root;
        cfg["noise_sigma"] = scene.depth_noise_sigma;
        cfg["outlier_rate"] = scene.outlier_rate;

        json &m = r.metrics;
        m["config"] = cfg;
        m["scene"] = {{"objects", scene.objects.size()},
                      {"cameras", scene.cameras.size()},
                      {"categories", K}};
        m["keyframes"] = r.keyframes;
        m["depth"] = {{"pixels", depth_stats.pixels},
                      {"ordinal_loss", depth_stats.ordinal_loss},
                      {"l1", depth_stats.l1},
                      {"depth_loss", depth_stats.total}};
        m["scatter"] = {{"raw_points", raw_count}, {"capped_points", r.cloud.size()}};
        m["surface"] = {{"inliers", r.labeling.inlier_count()},
                        {"focal_loss", focal},
                        {"outlier_fraction_unfiltered", outliers_before},
                        {"outlier_fraction_filtered", outliers_after},
                        {"kept_points", kept_count}};
        m["sparsity"] = {{"ps", report_json(r.sparsity_ps)}, {"gs", report_json(r.sparsity_gs)}};
        m["detection"] = detection_report_to_json(report);
        m["detection"]["count"] = r.detections.size();
        m["reconstruction"] = {{"evaluated", recon.evaluated}, {"chamfer", recon.chamfer}, {"fscore", recon.fscore}};
        return 0;
    });
    return r;
}

void write_artifacts(const PipelineConfig &config, const PipelineResult &result) {
    stage("write", [&] {
        const std::filesystem::path dir = config.output_dir;
        std::filesystem::create_directories(dir);
        ScatterCloud raw = result.cloud;
        raw.scores.resize(0);
        write_cloud_ply(dir / "raw_cloud.ply", raw);
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < result.cloud.size(); ++i)
            if (result.cloud.scores(static_cast<Eigen::Index>(i)) >= config.score_threshold) keep.push_back(i);
        write_cloud_ply(dir / "filtered_cloud.ply", result.cloud.select(keep));
        write_voxels_ply(dir / "voxels.ply",
                         voxelize(result.cloud, config.voxel_size_ps, grid_origin(result.scene), Pooling::Mean));
        write_json(dir / "sparsity.json", result.metrics.at("sparsity"));
        write_json(dir / "detections.json", detections_to_json(result.detections));
        write_json(dir / "gt_boxes.json", detections_to_json(result.scene.gt_boxes()));
        write_json(dir / "scene.json", scene_to_json(result.scene));
        write_json(dir / "metrics.json", result.metrics);
        return 0;
    });
}

BenchResult run_sparsity_bench(const PipelineConfig &config) {
    config.validate();
    const SceneSpec scene = resolve_scene(config);
    const std::uint64_t root = config.seed.value_or(scene.rng_seed);
    BenchResult b;

    const auto t0 = std::chrono::steady_clock::now();
    ScatterCloud cloud = stage("scatter", [&] {
        ScatterConfig sc = config.scatter;
        sc.rng_seed = split_seed(root, "scatter");
        Scatterer scatterer(sc);
        for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
            CameraFrame frame = render_frame(scene, i, config.min_box_pixels);
            frame.depth = perturb_depth(frame.depth, scene.depth_noise_sigma, scene.outlier_rate, config.depth_min,
                                        config.depth_max, split_seed(root, "depth", i));
            scatterer.scatter_frame(frame, static_cast<int>(i));
        }
        return cap_points(scatterer.cloud(), sc.max_points, split_seed(root, "cap"));
    });
    b.scatter_seconds = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const DenseGridSpec dense_ps(scene.bounds(), config.voxel_size_ps);
    const DenseGridSpec dense_gs(scene.bounds(), config.voxel_size_gs);
    stage("voxelize", [&] {
        b.ps = sparsity_report(cloud, dense_ps);
        b.gs = sparsity_report(cloud, dense_gs);
        return 0;
    });
    b.voxelize_seconds = seconds_since(t1);

    const auto t2 = std::chrono::steady_clock::now();
    double checksum = 0.0;
    for (const Eigen::Vector3d &c : dense_grid_points(dense_ps)) checksum += c.z();
    b.dense_iterate_seconds = seconds_since(t2);

    b.report = {{"scene_bounds",
                 {{"min", {scene.bounds().min().x(), scene.bounds().min().y(), scene.bounds().min().z()}},
                  {"max", {scene.bounds().max().x(), scene.bounds().max().y(), scene.bounds().max().z()}}}},
                {"ps", report_json(b.ps)},
                {"gs", report_json(b.gs)},
                {"timings",
                 {{"scatter_seconds", b.scatter_seconds},
                  {"voxelize_seconds", b.voxelize_seconds},
                  {"dense_iterate_seconds", b.dense_iterate_seconds}}},
                {"dense_checksum", checksum}};
    return b;
}

}  // namespace psdet
