#pragma once

// Pinhole camera model.
//
// Pixel convention: (u, v) measured from the top-left corner, u to the right,
// v downward, pixel centers at integer coordinates. Camera frame is x right,
// y down, z forward. Poses are stored world-from-camera, so the camera center
// is the translation.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace psdet {

/// Depths at or below this value (meters, camera frame) are behind the camera.
inline constexpr double kBehindCameraEps = 1e-6;

template <typename Scalar>
struct Intrinsics {
    Scalar fx{1}, fy{1};
    Scalar cx{0}, cy{0};
    int width{1}, height{1};

    bool valid() const {
        return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
               cy < height;
    }
    bool contains(Scalar u, Scalar v) const {
        return u >= 0 && v >= 0 && u <= Scalar(width - 1) && v <= Scalar(height - 1);
    }
};

template <typename Scalar>
struct Pose {
    using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
    using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

    Matrix3 rotation = Matrix3::Identity();  // world-from-camera
    Vector3 translation = Vector3::Zero();   // camera center in world

    static Pose Identity() { return Pose{}; }

    bool valid(Scalar tol = Scalar(1e-9)) const {
        return (rotation.transpose() * rotation - Matrix3::Identity()).cwiseAbs().maxCoeff() <= tol &&
               std::abs(rotation.determinant() - Scalar(1)) <= tol;
    }
    Vector3 to_camera(const Vector3 &world) const {
        return rotation.transpose() * (world - translation);
    }
    Vector3 to_world(const Vector3 &cam) const { return rotation * cam + translation; }
    Pose inverse() const {
        Pose inv;
        inv.rotation = rotation.transpose();
        inv.translation = -(rotation.transpose() * translation);
        return inv;
    }
    /// this * other, both world-from-camera style transforms.
    Pose compose(const Pose &other) const {
        Pose out;
        out.rotation = rotation * other.rotation;
        out.translation = rotation * other.translation + translation;
        return out;
    }
};

template <typename Scalar>
struct Projection {
    Scalar u, v, depth;
};

template <typename Scalar>
struct PixelRay {
    Eigen::Matrix<Scalar, 2, 1> pixel;
    Eigen::Matrix<Scalar, 3, 1> origin;
    Eigen::Matrix<Scalar, 3, 1> direction;  // unit length, world frame
};

template <typename Scalar>
std::optional<Projection<Scalar>> project(const Eigen::Matrix<Scalar, 3, 1> &point,
                                          const Intrinsics<Scalar> &K, const Pose<Scalar> &pose) {
    const Eigen::Matrix<Scalar, 3, 1> pc = pose.to_camera(point);
    if (pc.z() <= Scalar(kBehindCameraEps)) return std::nullopt;
    return Projection<Scalar>{K.fx * pc.x() / pc.z() + K.cx, K.fy * pc.y() / pc.z() + K.cy, pc.z()};
}

/// Camera-frame vector through pixel (u, v) scaled to unit z.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> unit_depth_ray(Scalar u, Scalar v, const Intrinsics<Scalar> &K) {
    return {(u - K.cx) / K.fx, (v - K.cy) / K.fy, Scalar(1)};
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> backproject(Scalar u, Scalar v, Scalar depth, const Intrinsics<Scalar> &K,
                                        const Pose<Scalar> &pose) {
    if (!(depth > 0)) throw std::invalid_argument("backproject: depth must be positive");
    return pose.to_world(unit_depth_ray(u, v, K) * depth);
}

/// Ray through pixel (u, v). The direction is the unit-z camera ray rotated to
/// world and normalized, so backproject(u, v, d) equals
/// origin + d * direction / (direction in camera frame).z().
template <typename Scalar>
PixelRay<Scalar> pixel_ray(Scalar u, Scalar v, const Intrinsics<Scalar> &K, const Pose<Scalar> &pose) {
    PixelRay<Scalar> ray;
    ray.pixel = {u, v};
    ray.origin = pose.translation;
    ray.direction = (pose.rotation * unit_depth_ray(u, v, K)).normalized();
    return ray;
}

/// World-from-camera pose at `eye` looking at `target` with world +z up.
template <typename Scalar>
Pose<Scalar> look_at(const Eigen::Matrix<Scalar, 3, 1> &eye, const Eigen::Matrix<Scalar, 3, 1> &target,
                     const Eigen::Matrix<Scalar, 3, 1> &up = Eigen::Matrix<Scalar, 3, 1>::UnitZ()) {
    using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
    const Vector3 forward = (target - eye).normalized();
    Vector3 right = forward.cross(up);
    if (right.norm() < Scalar(1e-12)) right = forward.cross(Vector3::UnitY());
    right.normalize();
    const Vector3 down = forward.cross(right);
    Pose<Scalar> pose;
    pose.rotation.col(0) = right;
    pose.rotation.col(1) = down;
    pose.rotation.col(2) = forward;
    pose.translation = eye;
    return pose;
}

/// Rotation angle (radians) between two poses' orientations.
template <typename Scalar>
Scalar relative_rotation_angle(const Pose<Scalar> &a, const Pose<Scalar> &b) {
    const Scalar c = ((a.rotation.transpose() * b.rotation).trace() - Scalar(1)) / Scalar(2);
    return std::acos(std::clamp(c, Scalar(-1), Scalar(1)));
}

using Intrinsicsd = Intrinsics<double>;
using Posed = Pose<double>;
using PixelRayd = PixelRay<double>;

}  // namespace psdet
