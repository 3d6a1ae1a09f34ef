#include "psdet/depthcode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psdet {

DepthBins::DepthBins(double d_min, double d_max, int count) : d_min_(d_min), d_max_(d_max), count_(count) {
    if (!(d_min < d_max)) throw std::invalid_argument("DepthBins: d_min must be below d_max");
    if (count < 1) throw std::invalid_argument("DepthBins: need at least one bin");
}

double DepthBins::edge(int i) const {
    if (i <= 0) return d_min_;
    if (i >= count_) return d_max_;
    return d_min_ + i * (d_max_ - d_min_) / count_;
}

int encode_label(double depth, const DepthBins &bins) {
    if (!std::isfinite(depth)) throw std::invalid_argument("encode_label: non-finite depth");
    const double t = (depth - bins.d_min()) / (bins.d_max() - bins.d_min()) * bins.count();
    const int l = static_cast<int>(std::floor(t));
    return std::clamp(l, 0, bins.count() - 1);
}

int decode_label(const OrdinalProbs &probs) {
    const int surpassed = static_cast<int>((probs.array() > 0.5).count());
    return std::clamp(surpassed, 0, static_cast<int>(probs.size()) - 1);
}

double decode_depth(const OrdinalProbs &probs, const DepthBins &bins) {
    if (probs.size() != bins.count())
        throw std::invalid_argument("decode_depth: probability count does not match bins");
    return bins.midpoint(decode_label(probs));
}

OrdinalProbs consistent_probs(int label, int count) {
    OrdinalProbs p = OrdinalProbs::Zero(count);
    p.head(std::clamp(label, 0, count)).setOnes();
    return p;
}

namespace {

void check_ordinal_inputs(const Eigen::MatrixXd &probs, std::span<const int> labels) {
    if (probs.rows() == 0) throw std::invalid_argument("ordinal_loss: empty input");
    if (static_cast<std::size_t>(probs.rows()) != labels.size())
        throw std::invalid_argument("ordinal_loss: probs/labels length mismatch");
    for (int l : labels)
        if (l < 0 || l >= probs.cols()) throw std::invalid_argument("ordinal_loss: label out of range");
}

}  // namespace

double ordinal_loss(const Eigen::MatrixXd &probs, std::span<const int> labels) {
    check_ordinal_inputs(probs, labels);
    double total = 0.0;
    for (Eigen::Index k = 0; k < probs.rows(); ++k) {
        double psi = 0.0;
        for (Eigen::Index j = 0; j < probs.cols(); ++j) {
            const double p = std::clamp(probs(k, j), kProbClip, 1.0 - kProbClip);
            psi += j < labels[k] ? std::log(p) : std::log(1.0 - p);
        }
        total += psi;
    }
    return -total / static_cast<double>(probs.rows());
}

Eigen::MatrixXd ordinal_loss_gradient(const Eigen::MatrixXd &probs, std::span<const int> labels) {
    check_ordinal_inputs(probs, labels);
    const double inv_k = 1.0 / static_cast<double>(probs.rows());
    Eigen::MatrixXd grad(probs.rows(), probs.cols());
    for (Eigen::Index k = 0; k < probs.rows(); ++k) {
        for (Eigen::Index j = 0; j < probs.cols(); ++j) {
            const double p = probs(k, j);
            if (p < kProbClip || p > 1.0 - kProbClip) {
                grad(k, j) = 0.0;
            } else {
                grad(k, j) = j < labels[k] ? -inv_k / p : inv_k / (1.0 - p);
            }
        }
    }
    return grad;
}

double depth_loss(const Eigen::MatrixXd &probs, std::span<const int> labels,
                  std::span<const double> coarse_depths, std::span<const double> residuals,
                  std::span<const double> gt_depths) {
    const std::size_t n = labels.size();
    if (coarse_depths.size() != n || residuals.size() != n || gt_depths.size() != n)
        throw std::invalid_argument("depth_loss: inconsistent lengths");
    const double ordinal = ordinal_loss(probs, labels);
    double l1 = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        l1 += std::abs(apply_residual(coarse_depths[k], residuals[k]) - gt_depths[k]);
    return ordinal + l1 / static_cast<double>(n);
}

}  // namespace psdet
