#pragma once

// Multi-view feature aggregation: project a point into every keyframe, fetch
// bilinear features where the projection is valid and reduce them with the
// masked mean and masked (population) variance.

#include "psdet/scatter.hpp"
#include "psdet/scenesim.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>

namespace psdet {

struct ProjectionSet {
    Eigen::MatrixX2d pixels;                                 // N x 2
    Eigen::Array<bool, Eigen::Dynamic, 1> mask;              // N
    Eigen::MatrixXd features;                                // N x C, zero rows where masked off

    int valid_count() const { return static_cast<int>(mask.count()); }
};

struct AggregateOptions {
    /// Drop projections whose depth exceeds the frame's depth by more than the tolerance.
    bool occlusion_check = false;
    double occlusion_tolerance = 0.0;  // meters
};

ProjectionSet build_projection_set(const Eigen::Vector3d &point, std::span<const CameraFrame> frames,
                                   const AggregateOptions &options = {});

struct MaskedMean {
    Eigen::VectorXd value;
    bool degenerate = false;  // no valid projection; value is zero
};

MaskedMean aggregate_mean(const ProjectionSet &set);
Eigen::VectorXd aggregate_variance(const ProjectionSet &set);

/// Category in [0, K) or std::nullopt for an unknown category (zero block).
Eigen::VectorXd append_onehot(const Eigen::VectorXd &feature, std::optional<int> category, int category_count);

struct AggregatedFeature {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    Eigen::VectorXd onehot;
    int valid_count = 0;
    bool degenerate = false;
};

AggregatedFeature aggregate_point(const Eigen::Vector3d &point, std::optional<int> category,
                                  std::span<const CameraFrame> frames, int category_count,
                                  const AggregateOptions &options = {});

/// Fills cloud.features ([mean | variance | one-hot]), cloud.valid_counts and cloud.layout.
void aggregate_cloud(ScatterCloud &cloud, std::span<const CameraFrame> frames, int category_count,
                     const AggregateOptions &options = {});

/// Sum using recursive pairwise splitting.
double pairwise_sum(std::span<const double> values);

}  // namespace psdet
