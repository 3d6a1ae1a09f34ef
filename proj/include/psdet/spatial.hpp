#pragma once

// Spatial indices over 3D points: a uniform hash grid for fixed-radius
// queries and a static k-d tree for exact nearest neighbours.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace psdet {

/// Packs a signed 3-index into 63 bits, 21 bits per axis.
inline std::uint64_t pack_cell(const Eigen::Vector3i &idx) {
    constexpr std::uint64_t mask = (1ull << 21) - 1;
    return ((static_cast<std::uint64_t>(idx.x()) & mask) << 42) |
           ((static_cast<std::uint64_t>(idx.y()) & mask) << 21) | (static_cast<std::uint64_t>(idx.z()) & mask);
}

inline Eigen::Vector3i unpack_cell(std::uint64_t key) {
    constexpr std::uint64_t mask = (1ull << 21) - 1;
    auto sext = [](std::uint64_t v) {
        return static_cast<int>(v & (1ull << 20) ? static_cast<std::int64_t>(v) - (1ll << 21)
                                                  : static_cast<std::int64_t>(v));
    };
    return {sext((key >> 42) & mask), sext((key >> 21) & mask), sext(key & mask)};
}

inline constexpr int kMaxCellIndex = (1 << 20) - 1;

inline Eigen::Vector3i cell_index(const Eigen::Vector3d &p, const Eigen::Vector3d &origin, double cell_size) {
    return ((p - origin) / cell_size).array().floor().cast<int>();
}

/// Uniform hash grid with cell size equal to the query radius. A radius query
/// visits the 27 cells around the query point.
class HashGrid {
public:
    explicit HashGrid(double cell_size, Eigen::Vector3d origin = Eigen::Vector3d::Zero());

    double cell_size() const { return cell_size_; }
    std::size_t size() const { return points_.size(); }
    const std::vector<Eigen::Vector3d> &points() const { return points_; }

    /// Returns the index of the inserted point.
    std::size_t insert(const Eigen::Vector3d &p);

    /// True if some stored point lies strictly closer than `radius` (radius <= cell size).
    bool any_within(const Eigen::Vector3d &p, double radius) const;

    /// Indices of stored points with distance <= radius (radius <= cell size).
    std::vector<std::size_t> radius_search(const Eigen::Vector3d &p, double radius) const;

private:
    Eigen::Vector3i index_of(const Eigen::Vector3d &p) const;

    double cell_size_;
    Eigen::Vector3d origin_;
    std::vector<Eigen::Vector3d> points_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// Static 3D k-d tree. Nearest-neighbour queries are exact.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::span<const Eigen::Vector3d> points);

    struct Neighbor {
        std::size_t index;
        double squared_distance;
    };

    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }
    /// Precondition: tree not empty. Ties resolve to the smallest index.
    Neighbor nearest(const Eigen::Vector3d &q) const;

private:
    struct Node {
        std::size_t begin, end;  // range in order_
        int axis;
        double split;
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end);
    void search(int node, const Eigen::Vector3d &q, Neighbor &best) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace psdet
