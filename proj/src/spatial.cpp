#include "psdet/spatial.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace psdet {

HashGrid::HashGrid(double cell_size, Eigen::Vector3d origin) : cell_size_(cell_size), origin_(std::move(origin)) {
    if (!(cell_size > 0)) throw std::invalid_argument("HashGrid: cell size must be positive");
}

Eigen::Vector3i HashGrid::index_of(const Eigen::Vector3d &p) const { return cell_index(p, origin_, cell_size_); }

std::size_t HashGrid::insert(const Eigen::Vector3d &p) {
    const std::size_t id = points_.size();
    points_.push_back(p);
    cells_[pack_cell(index_of(p))].push_back(id);
    return id;
}

bool HashGrid::any_within(const Eigen::Vector3d &p, double radius) const {
    const double r2 = radius * radius;
    const Eigen::Vector3i c = index_of(p);
    for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dz = -1; dz <= 1; ++dz) {
                const auto it = cells_.find(pack_cell(c + Eigen::Vector3i(dx, dy, dz)));
                if (it == cells_.end()) continue;
                for (std::size_t i : it->second)
                    if ((points_[i] - p).squaredNorm() < r2) return true;
            }
    return false;
}

std::vector<std::size_t> HashGrid::radius_search(const Eigen::Vector3d &p, double radius) const {
    const double r2 = radius * radius;
    const Eigen::Vector3i c = index_of(p);
    std::vector<std::size_t> out;
    for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dz = -1; dz <= 1; ++dz) {
                const auto it = cells_.find(pack_cell(c + Eigen::Vector3i(dx, dy, dz)));
                if (it == cells_.end()) continue;
                for (std::size_t i : it->second)
                    if ((points_[i] - p).squaredNorm() <= r2) out.push_back(i);
            }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {
constexpr std::size_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Eigen::Vector3d> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 1);
        build(0, points_.size());
    }
}

int KdTree::build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end, -1, 0.0});
    if (end - begin <= kLeafSize) return id;

    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(int node_id, const Eigen::Vector3d &q, Neighbor &best) const {
    const Node &node = nodes_[node_id];
    if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            const double d = (points_[idx] - q).squaredNorm();
            if (d < best.squared_distance || (d == best.squared_distance && idx < best.index))
                best = {idx, d};
        }
        return;
    }
    const double diff = q[node.axis] - node.split;
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff <= best.squared_distance) search(far, q, best);
}

KdTree::Neighbor KdTree::nearest(const Eigen::Vector3d &q) const {
    if (points_.empty()) throw std::logic_error("KdTree::nearest on empty tree");
    Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
    search(0, q, best);
    return best;
}

}  // namespace psdet
