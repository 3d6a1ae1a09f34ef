#include "psdet/surfacefilter.hpp"

#include "psdet/focal.hpp"
#include "psdet/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psdet {

std::size_t SurfaceLabeling::inlier_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

double SurfaceLabeling::outlier_fraction() const {
    if (labels.empty()) return 0.0;
    return 1.0 - static_cast<double>(inlier_count()) / static_cast<double>(labels.size());
}

SurfaceLabeling label_points(std::span<const Eigen::Vector3d> points, std::span<const Eigen::Vector3d> gt_surface,
                             double tau) {
    if (gt_surface.empty()) throw std::invalid_argument("label_points: empty ground-truth surface");
    if (!(tau > 0)) throw std::invalid_argument("label_points: tau must be positive");
    const KdTree tree(gt_surface);
    SurfaceLabeling out;
    out.tau = tau;
    out.labels.resize(points.size());
    out.distances.resize(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = std::sqrt(tree.nearest(points[i]).squared_distance);
        out.distances(static_cast<Eigen::Index>(i)) = d;
        out.labels[i] = d < tau;
    }
    return out;
}

std::vector<Eigen::Vector3d> sample_gt_surface(std::span<const Triangle> mesh, double tau, std::uint64_t seed) {
    if (!(tau > 0)) throw std::invalid_argument("sample_gt_surface: tau must be positive");
    const auto count = static_cast<std::size_t>(std::ceil(mesh_area(mesh) * 4.0 / (tau * tau)));
    return sample_surface(mesh, std::max<std::size_t>(count, 1), seed);
}

namespace {

void check_lengths(const Eigen::VectorXd &scores, const SurfaceLabeling &labeling) {
    if (static_cast<std::size_t>(scores.size()) != labeling.labels.size())
        throw std::invalid_argument("focal_loss: scores/labels length mismatch");
    if (scores.size() == 0) throw std::invalid_argument("focal_loss: empty input");
}

}  // namespace

double focal_loss(const Eigen::VectorXd &scores, const SurfaceLabeling &labeling, double gamma) {
    check_lengths(scores, labeling);
    double total = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        total += focal_term(scores(i), labeling.labels[static_cast<std::size_t>(i)], gamma);
    return total / static_cast<double>(scores.size());
}

Eigen::VectorXd focal_loss_gradient(const Eigen::VectorXd &scores, const SurfaceLabeling &labeling, double gamma) {
    check_lengths(scores, labeling);
    Eigen::VectorXd g(scores.size());
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        g(i) = focal_term_derivative(scores(i), labeling.labels[static_cast<std::size_t>(i)], gamma) /
               static_cast<double>(scores.size());
    return g;
}

Eigen::VectorXd photometric_score(const Eigen::MatrixXd &variances, const Eigen::VectorXi &valid_counts,
                                  double k_sigma) {
    if (!(k_sigma > 0)) throw std::invalid_argument("photometric_score: k_sigma must be positive");
    if (variances.rows() != valid_counts.size())
        throw std::invalid_argument("photometric_score: variances/valid_counts length mismatch");
    Eigen::VectorXd s(variances.rows());
    for (Eigen::Index i = 0; i < variances.rows(); ++i) {
        if (valid_counts(i) < 2 || variances.cols() == 0) {
            s(i) = kDefaultSurfaceScore;
        } else {
            s(i) = std::exp(-variances.row(i).mean() / k_sigma);
        }
    }
    return s;
}

Eigen::VectorXd photometric_score(const ScatterCloud &cloud, double k_sigma) {
    const int c = cloud.layout.channels;
    if (cloud.features.rows() != static_cast<Eigen::Index>(cloud.size()) || cloud.features.cols() < 2 * c)
        throw std::invalid_argument("photometric_score: cloud has no aggregated features");
    return photometric_score(cloud.features.middleCols(c, c), cloud.valid_counts, k_sigma);
}

Eigen::MatrixXd soft_weight(const Eigen::MatrixXd &features, const Eigen::VectorXd &scores, int aggregated_channels) {
    if (features.rows() != scores.size()) throw std::invalid_argument("soft_weight: length mismatch");
    if (aggregated_channels < 0 || aggregated_channels > features.cols())
        throw std::invalid_argument("soft_weight: channel count out of range");
    Eigen::MatrixXd out = features;
    out.leftCols(aggregated_channels).array().colwise() *= scores.array();
    return out;
}

void soft_weight(ScatterCloud &cloud) {
    cloud.features = soft_weight(cloud.features, cloud.scores, cloud.layout.aggregated());
}

}  // namespace psdet
