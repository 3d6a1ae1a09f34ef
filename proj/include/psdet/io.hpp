#pragma once

// File formats: JSON scenes and detections, ASCII PLY clouds, PGM/PPM maps,
// and JSON sparsity reports.

#include "psdet/evalmetrics.hpp"
#include "psdet/image.hpp"
#include "psdet/obb.hpp"
#include "psdet/scatter.hpp"
#include "psdet/scenesim.hpp"
#include "psdet/voxelgrid.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace psdet {

using json = nlohmann::json;

/// Malformed or inconsistent input file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json read_json(const std::filesystem::path &path);
void write_json(const std::filesystem::path &path, const json &j);
void write_text(const std::filesystem::path &path, const std::string &text);

json box_to_json(const OrientedBox &box);
OrientedBox box_from_json(const json &j);

/// {objects:[{center,size,yaw,category}], cameras:[...] | trajectory:{...}, rng_seed, depth_noise_sigma, outlier_rate}
SceneSpec scene_from_json(const json &j);
json scene_to_json(const SceneSpec &scene);

std::vector<OrientedBox> detections_from_json(const json &j);
json detections_to_json(const std::vector<OrientedBox> &boxes);

json sparsity_to_json(const SparsityReport &report);
/// Throws FormatError when a required field is missing or has the wrong type.
void validate_sparsity_json(const json &j);

json detection_report_to_json(const DetectionReport &report);

/// ASCII PLY with x y z frame u v category score (+ optional feature columns f0..fn).
void write_cloud_ply(const std::filesystem::path &path, const ScatterCloud &cloud, bool with_features = false);
ScatterCloud read_cloud_ply(const std::filesystem::path &path);

/// Plain x y z PLY.
void write_points_ply(const std::filesystem::path &path, const std::vector<Eigen::Vector3d> &points);

/// Occupied cell centers as PLY with a point count column.
void write_voxels_ply(const std::filesystem::path &path, const SparseVoxelGrid &grid);

/// 16-bit binary PGM, depth in millimeters.
void write_depth_pgm(const std::filesystem::path &path, const DepthMap &depth);
/// 8-bit binary PPM of the first three channels.
void write_color_ppm(const std::filesystem::path &path, const FeatureMap &color);

}  // namespace psdet
