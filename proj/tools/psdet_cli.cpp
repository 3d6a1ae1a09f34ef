// psdet: command-line driver for the point-scattering pipeline.
//
//   psdet gen-scene --preset demo -o scene.json
//   psdet run --config cfg.json --frames 25 --output-dir out
//   psdet bench --preset room -o bench.json
//   psdet eval dets.json gt.json
//   psdet export-ply --output-dir maps
//
// Exit codes: 0 success, 1 configuration error, 2 stage failure.

#include "psdet/io.hpp"
#include "psdet/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace psdet;

struct Overrides {
    std::string config_path;
    std::string scene;
    std::string preset;
    std::string output_dir;
    std::string detector;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> frames;
    std::optional<std::size_t> max_points;
    std::optional<double> noise_sigma;
    std::optional<double> outlier_rate;
};

void add_config_flags(CLI::App *cmd, Overrides &o) {
    cmd->add_option("-c,--config", o.config_path, "Pipeline config JSON");
    cmd->add_option("--scene", o.scene, "Scene JSON (overrides the preset)");
    cmd->add_option("--preset", o.preset, "Built-in scene: demo | room");
    cmd->add_option("--seed", o.seed, "Root seed");
    cmd->add_option("--frames", o.frames, "Keyframe target");
    cmd->add_option("--max-points", o.max_points, "Scattered point cap");
    cmd->add_option("--noise-sigma", o.noise_sigma, "Depth noise sigma (m)");
    cmd->add_option("--outlier-rate", o.outlier_rate, "Depth outlier rate");
    cmd->add_option("--output-dir", o.output_dir, "Output directory");
    cmd->add_option("--detector", o.detector, "gt_passthrough | score_cluster");
}

PipelineConfig resolve_config(const Overrides &o) {
    json j = json::object();
    if (!o.config_path.empty()) {
        try {
            j = read_json(o.config_path);
        } catch (const std::exception &e) {
            throw ConfigError(e.what());
        }
    }
    if (!j.is_object()) throw ConfigError("config: expected an object");
    if (!o.scene.empty()) j["scene"] = o.scene;
    if (!o.preset.empty()) {
        j["preset"] = o.preset;
        if (o.scene.empty()) j["scene"] = "";
    }
    if (!o.output_dir.empty()) j["output_dir"] = o.output_dir;
    if (!o.detector.empty()) j["detector"]["mode"] = o.detector;
    if (o.seed) j["seed"] = *o.seed;
    if (o.frames) j["frames"] = *o.frames;
    if (o.max_points) j["scatter"]["max_points"] = *o.max_points;
    if (o.noise_sigma) j["noise_sigma"] = *o.noise_sigma;
    if (o.outlier_rate) j["outlier_rate"] = *o.outlier_rate;
    return config_from_json(j);
}

void print_summary(const json &metrics) {
    const json &det = metrics.at("detection");
    std::cout << "points " << metrics.at("scatter").at("capped_points") << ", detections " << det.at("count");
    for (const auto &[key, value] : det.at("mean").items()) std::cout << ", " << key << " " << value;
    std::cout << "\n";
}

int cmd_gen_scene(const Overrides &o, const std::string &out) {
    const SceneSpec scene = resolve_scene(resolve_config(o));
    json j = scene_to_json(scene);
    if (o.seed) j["rng_seed"] = *o.seed;
    if (out.empty() || out == "-")
        std::cout << j.dump(2) << "\n";
    else
        write_json(out, j);
    return 0;
}

int cmd_run(const Overrides &o) {
    const PipelineConfig config = resolve_config(o);
    const PipelineResult result = run_pipeline(config);
    write_artifacts(config, result);
    print_summary(result.metrics);
    return 0;
}

int cmd_bench(const Overrides &o, const std::string &out) {
    const BenchResult bench = run_sparsity_bench(resolve_config(o));
    if (out.empty() || out == "-")
        std::cout << bench.report.dump(2) << "\n";
    else
        write_json(out, bench.report);
    return 0;
}

int cmd_eval(const Overrides &o, const std::string &dets_path, const std::string &gt_path, const std::string &out) {
    const PipelineConfig config = resolve_config(o);
    std::vector<OrientedBox> dets, gts;
    try {
        dets = detections_from_json(read_json(dets_path));
        gts = detections_from_json(read_json(gt_path));
    } catch (const std::exception &e) {
        throw ConfigError(e.what());
    }
    json j = detection_report_to_json(evaluate_detections(dets, gts, config.eval));
    j["count"] = dets.size();
    if (out.empty() || out == "-")
        std::cout << j.dump(2) << "\n";
    else
        write_json(out, j);
    return 0;
}

int cmd_export(const Overrides &o) {
    const PipelineConfig config = resolve_config(o);
    const PipelineResult result = run_pipeline(config);
    const std::filesystem::path dir = config.output_dir;
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < result.frames.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "frame_%03zu", result.keyframes[i]);
        write_depth_pgm(dir / (std::string(stem) + "_depth.pgm"), result.frames[i].depth);
        write_color_ppm(dir / (std::string(stem) + "_color.ppm"), result.frames[i].color);
    }
    write_cloud_ply(dir / "cloud_features.ply", result.cloud, true);
    write_points_ply(dir / "gt_surface.ply", sample_surface(result.scene.triangles(), 20000, 0));
    std::cout << "exported " << result.frames.size() << " frames to " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Point-scattering multi-view 3D detection pipeline"};
    app.require_subcommand(1);

    Overrides o;
    std::string out, dets_path, gt_path;

    auto *gen = app.add_subcommand("gen-scene", "Write a scene JSON");
    add_config_flags(gen, o);
    gen->add_option("-o,--out", out, "Output path (stdout if omitted)");

    auto *run = app.add_subcommand("run", "Run the full pipeline and write artifacts");
    add_config_flags(run, o);

    auto *bench = app.add_subcommand("bench", "Scattered vs dense sparsity benchmark");
    add_config_flags(bench, o);
    bench->add_option("-o,--out", out, "Report path (stdout if omitted)");

    auto *eval = app.add_subcommand("eval", "Detection metrics from detection and ground-truth JSON");
    add_config_flags(eval, o);
    eval->add_option("detections", dets_path, "Detections JSON")->required();
    eval->add_option("ground_truth", gt_path, "Ground-truth boxes JSON")->required();
    eval->add_option("-o,--out", out, "Report path (stdout if omitted)");

    auto *exp = app.add_subcommand("export-ply", "Write keyframe depth/color maps and the feature cloud");
    add_config_flags(exp, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*gen) return cmd_gen_scene(o, out);
        if (*run) return cmd_run(o);
        if (*bench) return cmd_bench(o, out);
        if (*eval) return cmd_eval(o, dets_path, gt_path, out);
        if (*exp) return cmd_export(o);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const StageError &e) {
        std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
