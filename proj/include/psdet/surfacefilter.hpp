#pragma once

// Surface filtering: nearest-neighbour inlier labels against a ground-truth
// surface sample, the binary focal loss, a photometric-variance surface score
// and soft down-weighting of aggregated features.

#include "psdet/mesh.hpp"
#include "psdet/scatter.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace psdet {

struct SurfaceLabeling {
    std::vector<bool> labels;  // inlier flags
    Eigen::VectorXd distances;
    double tau = 0.05;

    std::size_t inlier_count() const;
    double outlier_fraction() const;
};

/// labels[i] = min_y |x_i - y| < tau.
SurfaceLabeling label_points(std::span<const Eigen::Vector3d> points, std::span<const Eigen::Vector3d> gt_surface,
                             double tau);

/// Area-weighted sample of the mesh with at least 4 / tau^2 points per square meter.
std::vector<Eigen::Vector3d> sample_gt_surface(std::span<const Triangle> mesh, double tau, std::uint64_t seed);

/// Mean binary focal loss over points.
double focal_loss(const Eigen::VectorXd &scores, const SurfaceLabeling &labeling, double gamma = 2.0);
Eigen::VectorXd focal_loss_gradient(const Eigen::VectorXd &scores, const SurfaceLabeling &labeling,
                                    double gamma = 2.0);

inline constexpr double kDefaultSurfaceScore = 0.5;

/// s = exp(-mean_variance / k_sigma); points seen by fewer than two frames get 0.5.
Eigen::VectorXd photometric_score(const Eigen::MatrixXd &variances, const Eigen::VectorXi &valid_counts,
                                  double k_sigma);

/// Reads the variance block of cloud.features.
Eigen::VectorXd photometric_score(const ScatterCloud &cloud, double k_sigma);

/// Scales the first `aggregated_channels` columns of each row by its score.
Eigen::MatrixXd soft_weight(const Eigen::MatrixXd &features, const Eigen::VectorXd &scores, int aggregated_channels);

/// Applies soft_weight to cloud.features with cloud.scores; one-hot block untouched.
void soft_weight(ScatterCloud &cloud);

}  // namespace psdet
