#include "psdet/scatter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace psdet {

void ScatterConfig::validate() const {
    if (!(radius > 0)) throw std::invalid_argument("scatter: radius must be positive");
    if (max_points < 1) throw std::invalid_argument("scatter: max_points must be >= 1");
}

std::vector<Eigen::Vector3d> ScatterCloud::positions() const {
    std::vector<Eigen::Vector3d> out;
    out.reserve(points.size());
    for (const auto &p : points) out.push_back(p.position);
    return out;
}

ScatterCloud ScatterCloud::select(const std::vector<std::size_t> &indices) const {
    ScatterCloud out;
    out.layout = layout;
    const bool has_features = features.rows() == static_cast<Eigen::Index>(points.size());
    const bool has_scores = scores.size() == static_cast<Eigen::Index>(points.size());
    const bool has_counts = valid_counts.size() == static_cast<Eigen::Index>(points.size());
    const auto n = static_cast<Eigen::Index>(indices.size());
    if (has_features) out.features.resize(n, features.cols());
    if (has_scores) out.scores.resize(n);
    if (has_counts) out.valid_counts.resize(n);
    out.points.reserve(indices.size());
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto i = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]);
        out.points.push_back(points.at(static_cast<std::size_t>(i)));
        if (has_features) out.features.row(r) = features.row(i);
        if (has_scores) out.scores(r) = scores(i);
        if (has_counts) out.valid_counts(r) = valid_counts(i);
    }
    return out;
}

int box_sampling_stride(double focal, double radius, double median_depth) {
    if (!(median_depth > 0)) throw std::invalid_argument("box_sampling_stride: depth must be positive");
    if (!(focal > 0) || !(radius > 0)) throw std::invalid_argument("box_sampling_stride: focal and radius must be positive");
    const double s = std::round(focal * radius / median_depth);
    return s < 1.0 ? 1 : static_cast<int>(std::min(s, 1e9));
}

namespace {

struct PixelRange {
    int u0, v0, u1, v1;  // inclusive
};

PixelRange pixel_range(const DepthMap &depth, const Box2D &box) {
    return {std::max(0, static_cast<int>(std::ceil(box.u_min))), std::max(0, static_cast<int>(std::ceil(box.v_min))),
            std::min(static_cast<int>(depth.cols()) - 1, static_cast<int>(std::floor(box.u_max))),
            std::min(static_cast<int>(depth.rows()) - 1, static_cast<int>(std::floor(box.v_max)))};
}

}  // namespace

double median_box_depth(const DepthMap &depth, const Box2D &box) {
    const PixelRange r = pixel_range(depth, box);
    std::vector<double> values;
    for (int v = r.v0; v <= r.v1; ++v)
        for (int u = r.u0; u <= r.u1; ++u)
            if (depth(v, u) > 0) values.push_back(depth(v, u));
    if (values.empty()) return 0.0;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double m = values[mid];
    if (values.size() % 2 == 0) {
        const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (m + lower);
    }
    return m;
}

Scatterer::Scatterer(const ScatterConfig &config) : Scatterer(config, ScatterCloud{}) {}

Scatterer::Scatterer(const ScatterConfig &config, ScatterCloud existing)
    : config_(config), cloud_(std::move(existing)), grid_(config.radius) {
    config_.validate();
    for (const auto &p : cloud_.points) grid_.insert(p.position);
}

std::size_t Scatterer::scatter_frame(const CameraFrame &frame, int frame_index) {
    const std::size_t before = cloud_.points.size();
    std::unordered_set<std::int64_t> taken;
    for (const Box2D &box : frame.boxes2d) {
        const double median = median_box_depth(frame.depth, box);
        if (!(median > 0)) continue;
        const int stride = box_sampling_stride(frame.intrinsics.fx, config_.radius, median);
        const PixelRange r = pixel_range(frame.depth, box);
        for (int v = r.v0; v <= r.v1; v += stride) {
            for (int u = r.u0; u <= r.u1; u += stride) {
                const double d = frame.depth(v, u);
                if (!(d > 0)) continue;
                if (!taken.insert(static_cast<std::int64_t>(v) * frame.depth.cols() + u).second) continue;
                const Eigen::Vector3d p = backproject<double>(u, v, d, frame.intrinsics, frame.pose);
                if (grid_.any_within(p, config_.radius)) continue;
                cloud_.points.push_back({p, frame_index, Eigen::Vector2d(u, v), box.category});
            }
        }
    }
    for (std::size_t i = before; i < cloud_.points.size(); ++i) grid_.insert(cloud_.points[i].position);
    return cloud_.points.size() - before;
}

std::size_t scatter_frame(const CameraFrame &frame, int frame_index, ScatterCloud &existing,
                          const ScatterConfig &config) {
    Scatterer s(config, std::move(existing));
    const std::size_t added = s.scatter_frame(frame, frame_index);
    existing = s.release();
    return added;
}

ScatterCloud cap_points(const ScatterCloud &cloud, std::size_t max_points, std::uint64_t seed) {
    if (cloud.size() <= max_points) return cloud;
    std::vector<std::size_t> idx(cloud.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first max_points entries form a uniform subset.
    for (std::size_t i = 0; i < max_points; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(max_points);
    std::sort(idx.begin(), idx.end());
    return cloud.select(idx);
}

}  // namespace psdet
