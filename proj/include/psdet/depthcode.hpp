#pragma once

// Ordinal depth regression arithmetic: linear depth bins, label encoding,
// count-the-surpassed-thresholds decoding, the ordinal loss with its analytic
// gradient, and the residual-corrected depth loss.

#include <Eigen/Core>

#include <span>
#include <vector>

namespace psdet {

/// Linear discretization of [d_min, d_max] into `count` bins.
class DepthBins {
public:
    DepthBins(double d_min, double d_max, int count);

    double d_min() const { return d_min_; }
    double d_max() const { return d_max_; }
    int count() const { return count_; }
    double width() const { return (d_max_ - d_min_) / count_; }
    double edge(int i) const;
    double midpoint(int label) const { return 0.5 * (edge(label) + edge(label + 1)); }

private:
    double d_min_, d_max_;
    int count_;
};

/// p[j] = P(label > j). One row per pixel in batched APIs.
using OrdinalProbs = Eigen::VectorXd;

inline constexpr double kProbClip = 1e-7;

int encode_label(double depth, const DepthBins &bins);

/// Number of probabilities above 0.5, clamped to count - 1.
int decode_label(const OrdinalProbs &probs);
double decode_depth(const OrdinalProbs &probs, const DepthBins &bins);

/// Probability pattern that decodes to `label` with zero ordinal loss.
OrdinalProbs consistent_probs(int label, int count);

/// probs: K x D, one row per pixel. labels: K entries.
double ordinal_loss(const Eigen::MatrixXd &probs, std::span<const int> labels);

/// d(ordinal_loss)/d(probs), same shape as probs. Zero where a probability is clipped.
Eigen::MatrixXd ordinal_loss_gradient(const Eigen::MatrixXd &probs, std::span<const int> labels);

inline double apply_residual(double coarse, double residual) { return coarse + residual; }

/// ordinal_loss + mean |coarse + residual - gt|.
double depth_loss(const Eigen::MatrixXd &probs, std::span<const int> labels,
                  std::span<const double> coarse_depths, std::span<const double> residuals,
                  std::span<const double> gt_depths);

}  // namespace psdet
