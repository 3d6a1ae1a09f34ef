#include "psdet/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace psdet {

TriangleMesh box_mesh(const OrientedBox &box) {
    const auto c = box_corners(box);
    // Bottom 0-3 and top 4-7, both counter-clockwise from above.
    constexpr int faces[12][3] = {
        {0, 2, 1}, {0, 3, 2},  // bottom, normal -z
        {4, 5, 6}, {4, 6, 7},  // top
        {0, 1, 5}, {0, 5, 4},  // sides
        {1, 2, 6}, {1, 6, 5},
        {2, 3, 7}, {2, 7, 6},
        {3, 0, 4}, {3, 4, 7},
    };
    TriangleMesh mesh;
    mesh.reserve(12);
    for (const auto &f : faces) mesh.push_back({c[f[0]], c[f[1]], c[f[2]]});
    return mesh;
}

std::optional<double> intersect_ray_triangle(const Eigen::Vector3d &origin, const Eigen::Vector3d &direction,
                                             const Triangle &tri, double t_min) {
    const Eigen::Vector3d e1 = tri.b - tri.a;
    const Eigen::Vector3d e2 = tri.c - tri.a;
    const Eigen::Vector3d pvec = direction.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-15) return std::nullopt;
    const double inv = 1.0 / det;
    const Eigen::Vector3d tvec = origin - tri.a;
    const double u = tvec.dot(pvec) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Eigen::Vector3d qvec = tvec.cross(e1);
    const double v = direction.dot(qvec) * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = e2.dot(qvec) * inv;
    if (t <= t_min) return std::nullopt;
    return t;
}

// Ericson, Real-Time Collision Detection, 5.1.5.
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d &p, const Triangle &tri) {
    const Eigen::Vector3d &a = tri.a, &b = tri.b, &c = tri.c;
    const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return a;
    const Eigen::Vector3d bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
    const Eigen::Vector3d cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

double point_triangle_distance(const Eigen::Vector3d &p, const Triangle &tri) {
    return (p - closest_point_on_triangle(p, tri)).norm();
}

double point_mesh_distance(const Eigen::Vector3d &p, std::span<const Triangle> mesh) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto &t : mesh) best = std::min(best, point_triangle_distance(p, t));
    return best;
}

double mesh_area(std::span<const Triangle> mesh) {
    double a = 0.0;
    for (const auto &t : mesh) a += t.area();
    return a;
}

std::vector<Eigen::Vector3d> sample_surface(std::span<const Triangle> mesh, std::size_t count, std::uint64_t seed) {
    if (mesh.empty()) throw std::invalid_argument("sample_surface: empty mesh");
    std::vector<double> cumulative(mesh.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) cumulative[i] = acc += mesh[i].area();
    if (!(acc > 0)) throw std::invalid_argument("sample_surface: zero-area mesh");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Eigen::Vector3d> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double r = unit(rng) * acc;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        const Triangle &t = mesh[std::min<std::size_t>(it - cumulative.begin(), mesh.size() - 1)];
        double s = unit(rng), q = unit(rng);
        if (s + q > 1.0) {
            s = 1.0 - s;
            q = 1.0 - q;
        }
        out.push_back(t.a + s * (t.b - t.a) + q * (t.c - t.a));
    }
    return out;
}

}  // namespace psdet
