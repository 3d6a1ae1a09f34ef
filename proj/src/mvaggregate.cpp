#include "psdet/mvaggregate.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace psdet {

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 2) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ProjectionSet build_projection_set(const Eigen::Vector3d &point, std::span<const CameraFrame> frames,
                                   const AggregateOptions &options) {
    const auto n = static_cast<Eigen::Index>(frames.size());
    const int channels = frames.empty() ? 0 : frames.front().color.channels();
    ProjectionSet set;
    set.pixels = Eigen::MatrixX2d::Zero(n, 2);
    set.mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);
    set.features = Eigen::MatrixXd::Zero(n, channels);
    for (Eigen::Index i = 0; i < n; ++i) {
        const CameraFrame &f = frames[static_cast<std::size_t>(i)];
        const auto proj = project(point, f.intrinsics, f.pose);
        if (!proj) continue;
        set.pixels.row(i) << proj->u, proj->v;
        if (!f.intrinsics.contains(proj->u, proj->v)) continue;
        if (options.occlusion_check && f.depth.size() > 0) {
            const double observed = f.depth(static_cast<Eigen::Index>(std::lround(proj->v)),
                                            static_cast<Eigen::Index>(std::lround(proj->u)));
            if (observed > 0 && proj->depth > observed + options.occlusion_tolerance) continue;
        }
        if (f.color.channels() != channels) throw std::invalid_argument("frames disagree on feature channels");
        set.mask(i) = true;
        set.features.row(i) = bilinear_sample(f.color, proj->u, proj->v).transpose();
    }
    return set;
}

namespace {

// Masked column sums divided by the valid count; gathers valid rows so
// duplicated frame lists reduce with the same split pattern.
Eigen::VectorXd masked_average(const Eigen::MatrixXd &values, const Eigen::Array<bool, Eigen::Dynamic, 1> &mask) {
    const int count = static_cast<int>(mask.count());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(values.cols());
    if (count == 0) return out;
    std::vector<double> column;
    column.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        column.clear();
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            if (mask(i)) column.push_back(values(i, c));
        out(c) = pairwise_sum(column) / count;
    }
    return out;
}

}  // namespace

MaskedMean aggregate_mean(const ProjectionSet &set) {
    return {masked_average(set.features, set.mask), set.valid_count() == 0};
}

Eigen::VectorXd aggregate_variance(const ProjectionSet &set) {
    Eigen::Index first = 0;
    while (first < set.mask.size() && !set.mask(first)) ++first;
    if (first == set.mask.size()) return Eigen::VectorXd::Zero(set.features.cols());
    // Shifting by a member row keeps identical inputs at exactly zero.
    const Eigen::MatrixXd shifted = set.features.rowwise() - set.features.row(first);
    const Eigen::VectorXd mean = masked_average(shifted, set.mask);
    const Eigen::MatrixXd centered = shifted.rowwise() - mean.transpose();
    return masked_average(centered.cwiseAbs2(), set.mask);
}

Eigen::VectorXd append_onehot(const Eigen::VectorXd &feature, std::optional<int> category, int category_count) {
    if (category_count < 0) throw std::invalid_argument("append_onehot: negative category count");
    if (category && (*category < 0 || *category >= category_count))
        throw std::invalid_argument("append_onehot: category out of range");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(feature.size() + category_count);
    out.head(feature.size()) = feature;
    if (category) out(feature.size() + *category) = 1.0;
    return out;
}

AggregatedFeature aggregate_point(const Eigen::Vector3d &point, std::optional<int> category,
                                  std::span<const CameraFrame> frames, int category_count,
                                  const AggregateOptions &options) {
    const ProjectionSet set = build_projection_set(point, frames, options);
    AggregatedFeature out;
    const MaskedMean mean = aggregate_mean(set);
    out.mean = mean.value;
    out.degenerate = mean.degenerate;
    out.variance = aggregate_variance(set);
    out.onehot = append_onehot(Eigen::VectorXd(), category, category_count);
    out.valid_count = set.valid_count();
    return out;
}

void aggregate_cloud(ScatterCloud &cloud, std::span<const CameraFrame> frames, int category_count,
                     const AggregateOptions &options) {
    const int channels = frames.empty() ? 0 : frames.front().color.channels();
    cloud.layout = {channels, category_count};
    const auto n = static_cast<Eigen::Index>(cloud.size());
    cloud.features = Eigen::MatrixXd::Zero(n, cloud.layout.width());
    cloud.valid_counts = Eigen::VectorXi::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const ScatterPoint &p = cloud.points[static_cast<std::size_t>(i)];
        std::optional<int> category;
        if (p.source_box_category >= 0 && p.source_box_category < category_count) category = p.source_box_category;
        const AggregatedFeature f = aggregate_point(p.position, category, frames, category_count, options);
        cloud.features.row(i).head(channels) = f.mean.transpose();
        cloud.features.row(i).segment(channels, channels) = f.variance.transpose();
        cloud.features.row(i).tail(category_count) = f.onehot.transpose();
        cloud.valid_counts(i) = f.valid_count;
    }
}

}  // namespace psdet
