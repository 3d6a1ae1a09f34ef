#pragma once

#include "psdet/obb.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace psdet {

struct Triangle {
    Eigen::Vector3d a, b, c;

    Eigen::Vector3d normal() const { return (b - a).cross(c - a).normalized(); }
    double area() const { return 0.5 * (b - a).cross(c - a).norm(); }
};

using TriangleMesh = std::vector<Triangle>;

/// The 12-triangle shell of a box, outward-facing winding.
TriangleMesh box_mesh(const OrientedBox &box);

/// Möller-Trumbore. Returns the ray parameter t (> t_min) of the hit, with the
/// direction taken as given (not normalized).
std::optional<double> intersect_ray_triangle(const Eigen::Vector3d &origin, const Eigen::Vector3d &direction,
                                             const Triangle &tri, double t_min = 1e-9);

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d &p, const Triangle &tri);
double point_triangle_distance(const Eigen::Vector3d &p, const Triangle &tri);
double point_mesh_distance(const Eigen::Vector3d &p, std::span<const Triangle> mesh);

double mesh_area(std::span<const Triangle> mesh);

/// Area-weighted uniform samples on the mesh surface.
std::vector<Eigen::Vector3d> sample_surface(std::span<const Triangle> mesh, std::size_t count, std::uint64_t seed);

}  // namespace psdet
