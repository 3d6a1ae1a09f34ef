#pragma once

// Yaw-only oriented 3D boxes [x, y, z, w, h, d, r_z].
//
// Size convention: w spans the box-local x axis, h the box-local y axis and
// d the vertical z axis. Yaw rotates the local frame about world +z.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <type_traits>
#include <vector>

namespace psdet {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

struct OrientedBox {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d size = Eigen::Vector3d::Ones();
    double yaw = 0.0;
    int category = 0;
    double score = 1.0;

    double volume() const { return size.prod(); }
    bool valid() const { return (size.array() > 0).all() && center.allFinite() && std::isfinite(yaw); }
    /// [x, y, z, w, h, d, r_z]
    Eigen::Matrix<double, 7, 1> params() const;
    static OrientedBox from_params(const Eigen::Matrix<double, 7, 1> &p, int category = 0, double score = 1.0);
    /// Point expressed in the box-local frame (origin at center, axes along w, h, d).
    Eigen::Vector3d to_local(const Eigen::Vector3d &world) const;
    bool contains(const Eigen::Vector3d &world) const;
};

OrientedBox make_box(const Eigen::Vector3d &center, const Eigen::Vector3d &size, double yaw = 0.0,
                     int category = 0, double score = 1.0);

struct Vote {
    Eigen::Vector3d seed_position = Eigen::Vector3d::Zero();
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();

    Eigen::Vector3d position() const { return seed_position + offset; }
};

/// Corners ordered bottom face first (z - d/2), counter-clockwise seen from +z,
/// then the top face in the same order.
std::array<Eigen::Vector3d, 8> box_corners(const OrientedBox &box);

/// Counter-clockwise xy footprint.
std::array<Eigen::Vector2d, 4> box_footprint(const OrientedBox &box);

/// Intersection of two convex counter-clockwise polygons (Sutherland-Hodgman).
std::vector<Eigen::Vector2d> clip_convex_polygon(std::span<const Eigen::Vector2d> subject,
                                                 std::span<const Eigen::Vector2d> clip);

/// Shoelace area, positive for counter-clockwise polygons.
double polygon_area(std::span<const Eigen::Vector2d> polygon);

double intersection_volume(const OrientedBox &a, const OrientedBox &b);
double iou_3d(const OrientedBox &a, const OrientedBox &b);

/// Greedy NMS. Returns indices into `boxes`, sorted by descending score.
std::vector<std::size_t> nms_indices(std::span<const OrientedBox> boxes, double iou_threshold,
                                     bool cross_category = false);
std::vector<OrientedBox> nms(std::span<const OrientedBox> boxes, double iou_threshold,
                             bool cross_category = false);

template <typename Scalar>
    requires std::is_floating_point_v<Scalar>
Scalar smooth_l1(Scalar x) {
    const Scalar ax = std::abs(x);
    return ax < Scalar(1) ? Scalar(0.5) * x * x : ax - Scalar(0.5);
}

template <typename Derived>
typename Derived::Scalar smooth_l1(const Eigen::MatrixBase<Derived> &x) {
    return x.unaryExpr([](typename Derived::Scalar v) { return smooth_l1(v); }).sum();
}

template <typename Scalar>
    requires std::is_floating_point_v<Scalar>
Scalar smooth_l1_derivative(Scalar x) {
    return std::abs(x) < Scalar(1) ? x : (x > 0 ? Scalar(1) : Scalar(-1));
}

/// Per-proposal ground-truth index: nearest center within `radius`, else -1.
std::vector<int> assign_proposals(std::span<const Eigen::Vector3d> proposal_centers,
                                  std::span<const Eigen::Vector3d> gt_centers, double radius = 0.3);

struct DetectionLossInputs {
    std::vector<Vote> votes;
    std::vector<Eigen::Vector3d> gt_centers;
    Eigen::MatrixXd class_probs;  // proposals x classes
    std::vector<int> class_labels;
    std::vector<Eigen::Matrix<double, 7, 1>> box_predictions;
    std::vector<Eigen::Matrix<double, 7, 1>> box_targets;
    double gamma = 2.0;
};

struct DetectionLoss {
    double vote_loss = 0.0;
    double cls_loss = 0.0;
    double reg_loss = 0.0;
    double total = 0.0;
};

/// vote: mean smooth-L1 of (vote - center nearest to the seed);
/// cls: mean focal loss on the labelled class probability;
/// reg: mean smooth-L1 over the 7 box parameters with wrapped yaw. Weights 1.
DetectionLoss detection_loss(const DetectionLossInputs &in);

}  // namespace psdet
