#pragma once

// Multi-view point scattering: per-box strided back-projection of depth
// pixels, radius-based deduplication against already scattered points, and a
// random cap on the final point count.

#include "psdet/scenesim.hpp"
#include "psdet/spatial.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace psdet {

struct ScatterPoint {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    int source_frame = -1;
    Eigen::Vector2d source_pixel = Eigen::Vector2d::Zero();
    int source_box_category = -1;
};

struct ScatterConfig {
    double radius = 0.04;          // meters; stride target and deduplication radius
    std::size_t max_points = 100000;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Layout of the per-point feature rows: [mean (C) | variance (C) | one-hot (K)].
struct FeatureLayout {
    int channels = 0;
    int categories = 0;

    int aggregated() const { return 2 * channels; }
    int width() const { return 2 * channels + categories; }
};

struct ScatterCloud {
    std::vector<ScatterPoint> points;
    Eigen::MatrixXd features;  // points x layout.width(), filled by aggregation
    Eigen::VectorXd scores;    // surface scores, filled by the surface filter
    Eigen::VectorXi valid_counts;
    FeatureLayout layout;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    std::vector<Eigen::Vector3d> positions() const;
    /// Subset of rows (parallel arrays resized consistently).
    ScatterCloud select(const std::vector<std::size_t> &indices) const;
};

/// max(1, round(f * radius / median_depth)).
int box_sampling_stride(double focal, double radius, double median_depth);

/// Median of the valid (positive) depths inside the box, or 0 when there are none.
double median_box_depth(const DepthMap &depth, const Box2D &box);

/// Stateful scatterer: keeps the spatial index over every accepted point so
/// frames can be inserted one after another. A new frame's points are checked
/// against the points of earlier frames only; a pixel sampled by two boxes of
/// the same frame is taken once.
class Scatterer {
public:
    explicit Scatterer(const ScatterConfig &config);
    /// Seeds the index with an existing cloud.
    Scatterer(const ScatterConfig &config, ScatterCloud existing);

    /// Appends the accepted points of `frame`, returns how many were added.
    std::size_t scatter_frame(const CameraFrame &frame, int frame_index);

    const ScatterCloud &cloud() const { return cloud_; }
    ScatterCloud release() { return std::move(cloud_); }

private:
    ScatterConfig config_;
    ScatterCloud cloud_;
    HashGrid grid_;
};

/// Free-function form over an explicit cloud.
std::size_t scatter_frame(const CameraFrame &frame, int frame_index, ScatterCloud &existing,
                          const ScatterConfig &config);

/// Identity when |cloud| <= max_points, else a uniform random subset of exactly
/// max_points points (input order preserved), deterministic given seed.
ScatterCloud cap_points(const ScatterCloud &cloud, std::size_t max_points, std::uint64_t seed);

}  // namespace psdet
