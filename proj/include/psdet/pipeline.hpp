#pragma once

// End-to-end experiment: scene -> keyframes -> depth -> scatter -> aggregate
// -> surface filter -> voxelize -> oracle detector -> evaluate, plus the
// dense-vs-scattered sparsity benchmark.

#include "psdet/evalmetrics.hpp"
#include "psdet/io.hpp"
#include "psdet/mvaggregate.hpp"
#include "psdet/scatter.hpp"
#include "psdet/scenesim.hpp"
#include "psdet/surfacefilter.hpp"
#include "psdet/voxelgrid.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace psdet {

/// Invalid configuration (exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure inside a pipeline stage (exit code 2).
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string &what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string &stage() const { return stage_; }

private:
    std::string stage_;
};

enum class DetectorMode { GtPassthrough, ScoreCluster };

struct OracleDetector {
    DetectorMode mode = DetectorMode::GtPassthrough;
    double cluster_eps = 0.1;
    std::size_t min_cluster_points = 20;
};

struct PipelineConfig {
    std::string scene_path;        // empty: use `preset`
    std::string preset = "demo";   // demo | room
    std::size_t frames = 50;       // keyframe target
    KeyframeCriteria keyframes{};
    double min_box_pixels = 16.0;
    double depth_min = 0.1, depth_max = 10.0;
    int depth_bins = 80;
    ScatterConfig scatter{};
    double tau = 0.05;
    double gamma = 2.0;
    double k_sigma = 0.01;
    double score_threshold = 0.5;
    bool occlusion_check = false;
    double occlusion_tolerance_floor = 0.05;  // meters; tolerance is max(3 sigma, floor)
    double voxel_size_ps = 0.04;
    double voxel_size_gs = 0.16;
    double nms_iou = 0.01;
    bool nms_cross_category = false;
    OracleDetector detector{};
    EvalConfig eval{};
    std::optional<std::uint64_t> seed;  // root seed; defaults to the scene's rng_seed
    std::optional<double> noise_sigma;  // overrides the scene's depth noise
    std::optional<double> outlier_rate;
    std::string output_dir = "out";

    void validate() const;
};

/// Throws ConfigError on unknown values or wrong types; missing keys keep defaults.
PipelineConfig config_from_json(const json &j);
json config_to_json(const PipelineConfig &config);

/// Deterministic child seed for a named stage.
std::uint64_t split_seed(std::uint64_t root, std::string_view label, std::uint64_t index = 0);

/// Scene referenced by the config with the noise overrides applied.
SceneSpec resolve_scene(const PipelineConfig &config);

struct PipelineResult {
    SceneSpec scene;
    std::vector<std::size_t> keyframes;
    std::vector<CameraFrame> frames;  // keyframes only, with perturbed depth
    ScatterCloud cloud;               // after cap, aggregation and soft weighting
    SurfaceLabeling labeling;
    std::vector<OrientedBox> detections;
    SparsityReport sparsity_ps;
    SparsityReport sparsity_gs;
    json metrics;
};

/// Runs every stage in memory. Does not touch the filesystem.
PipelineResult run_pipeline(const PipelineConfig &config);
PipelineResult run_pipeline(const PipelineConfig &config, const SceneSpec &scene);

/// Writes raw/filtered clouds, voxels, sparsity report, detections, ground
/// truth, resolved scene and metrics into config.output_dir.
void write_artifacts(const PipelineConfig &config, const PipelineResult &result);

std::vector<OrientedBox> detect(const OracleDetector &detector, const ScatterCloud &cloud,
                                const SceneSpec &scene, double score_threshold);

/// Connected components (distance <= eps) over the given points; clusters
/// ordered by their smallest member index.
std::vector<std::vector<std::size_t>> cluster_points(const std::vector<Eigen::Vector3d> &points, double eps);

struct ReconstructionMetrics {
    std::size_t evaluated = 0;
    double chamfer = 0.0;
    double fscore = 0.0;
};

/// Chamfer distance and F-score between sampled detection boxes and the best
/// matching ground-truth meshes, over detections with IoU > recon_iou.
ReconstructionMetrics evaluate_reconstruction(const std::vector<OrientedBox> &detections, const SceneSpec &scene,
                                              const EvalConfig &config, std::uint64_t seed);

struct BenchResult {
    SparsityReport ps;     // scattered cloud vs dense grid at voxel_size_ps
    SparsityReport gs;     // scattered cloud vs dense grid at voxel_size_gs
    double scatter_seconds = 0.0;
    double voxelize_seconds = 0.0;
    double dense_iterate_seconds = 0.0;
    json report;
};

BenchResult run_sparsity_bench(const PipelineConfig &config);

}  // namespace psdet
