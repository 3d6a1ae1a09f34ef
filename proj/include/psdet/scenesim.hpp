#pragma once

// Synthetic scene simulator: posed textured boxes, ray-cast depth and color,
// ground-truth 2D boxes, depth noise and keyframe selection.

#include "psdet/camera.hpp"
#include "psdet/image.hpp"
#include "psdet/mesh.hpp"
#include "psdet/obb.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace psdet {

struct SceneObject {
    OrientedBox box;  // box.category is the object's label
    TriangleMesh surface_mesh;
    Eigen::Vector3d albedo = Eigen::Vector3d::Constant(0.8);

    int category() const { return box.category; }
};

/// Object with the default 12-triangle shell mesh and an albedo derived from its index.
SceneObject make_object(const OrientedBox &box, std::size_t index);

struct CameraSpec {
    Intrinsicsd intrinsics;
    Posed pose;
};

struct SceneSpec {
    std::vector<SceneObject> objects;
    std::vector<CameraSpec> cameras;
    std::uint64_t rng_seed = 0;
    double depth_noise_sigma = 0.0;
    double outlier_rate = 0.0;
    /// Optional room extent; overrides the object bounds for dense-grid sizing.
    std::optional<Eigen::AlignedBox3d> room_bounds;

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;
    int category_count() const;
    std::vector<OrientedBox> gt_boxes() const;
    TriangleMesh triangles() const;
    /// room_bounds when set, else the axis-aligned bounds of all object meshes.
    Eigen::AlignedBox3d bounds() const;
};

struct Box2D {
    int category = 0;
    double u_min = 0, v_min = 0, u_max = 0, v_max = 0;
    int object = -1;

    double area() const { return (u_max - u_min) * (v_max - v_min); }
};

struct CameraFrame {
    Intrinsicsd intrinsics;
    Posed pose;
    DepthMap depth;
    FeatureMap color;  // 3 channels in [0, 1]
    std::vector<Box2D> boxes2d;
};

struct OrbitTrajectory {
    double radius = 3.0;
    double height = 1.5;
    int steps = 20;
    Eigen::Vector3d look_at = Eigen::Vector3d::Zero();
    Intrinsicsd intrinsics;
};

std::vector<CameraSpec> orbit_cameras(const OrbitTrajectory &orbit);

/// Default intrinsics for generated trajectories: 160x120, ~60 degree horizontal field of view.
Intrinsicsd default_intrinsics();

/// Camera-frame depth of the nearest surface per pixel, 0 on a miss.
DepthMap render_depth(const SceneSpec &scene, std::size_t camera_index);

struct RenderedImages {
    DepthMap depth;
    FeatureMap color;
};

/// Depth plus shaded color. Surfaces use albedo x procedural texture x Lambert
/// shading; background color varies with the ray direction.
RenderedImages render_images(const SceneSpec &scene, std::size_t camera_index);

/// Gaussian noise on valid pixels, then a Bernoulli(outlier_rate) subset of
/// valid pixels replaced by uniform depth in [d_min, d_max]. Results are
/// clamped into [d_min, d_max]; invalid pixels stay 0.
DepthMap perturb_depth(const DepthMap &depth, double sigma, double outlier_rate, double d_min, double d_max,
                       std::uint64_t seed);

std::vector<Box2D> project_gt_boxes(const SceneSpec &scene, std::size_t camera_index, double min_pixels);

/// Rendered images and 2D boxes for one camera.
CameraFrame render_frame(const SceneSpec &scene, std::size_t camera_index, double min_box_pixels);

struct KeyframeCriteria {
    std::size_t target_count = 50;
    double min_translation = 0.1;  // meters
    double min_rotation_deg = 10.0;
};

/// Greedy temporal scan preferring frames with detections and enough motion
/// relative to the previously selected frame, with relaxation passes when too
/// few frames qualify. Returns sorted unique indices.
std::vector<std::size_t> select_keyframes(std::span<const Posed> poses, std::span<const int> detections_per_frame,
                                          const KeyframeCriteria &criteria);

/// Three axis-aligned textured boxes seen by a 20-camera orbit.
SceneSpec demo_scene();

/// Room-scale scene filling an 8 x 8 x 3 m volume.
SceneSpec room_scene();

}  // namespace psdet
