#pragma once

// Detection and reconstruction metrics: greedy IoU matching, 11-point
// interpolated AP, recall, Chamfer distance, F-score and the shape-code loss.

#include "psdet/obb.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace psdet {

enum class DistanceMode { Squared, Unsquared };

struct EvalConfig {
    std::vector<double> iou_thresholds{0.25, 0.5};
    double fscore_threshold = 0.004;  // squared meters in Squared mode
    DistanceMode fscore_mode = DistanceMode::Squared;
    std::size_t sample_count = 2048;
    std::uint64_t rng_seed = 0;
    /// Detections need IoU above this with some GT box to enter reconstruction metrics.
    double recon_iou = 0.25;

    void validate() const;
};

struct PRPoint {
    double recall;
    double precision;
};
using PRCurve = std::vector<PRPoint>;

/// Same-category greedy matching. Returns TP flags in descending-score order
/// (ties by input index) together with that order.
struct MatchResult {
    std::vector<bool> tp;
    std::vector<double> scores;
    std::vector<std::size_t> order;  // indices into the input detections
    std::vector<int> matched_gt;     // per sorted detection, -1 if FP
};

MatchResult match_detections(std::span<const OrientedBox> detections, std::span<const OrientedBox> gts,
                             double iou_threshold);

/// PR curve after sorting by descending score (stable on ties).
PRCurve pr_curve(const std::vector<bool> &tp, std::span<const double> scores, std::size_t gt_count);

double average_precision_11pt(const std::vector<bool> &tp, std::span<const double> scores, std::size_t gt_count);

double recall_at(const std::vector<bool> &tp, std::size_t gt_count);

/// Mean squared nearest-neighbour distance from G to R plus from R to G.
double chamfer(std::span<const Eigen::Vector3d> g, std::span<const Eigen::Vector3d> r);

/// 100 * 2PR / (P + R) of nearest-neighbour proximity at threshold d.
double fscore(std::span<const Eigen::Vector3d> g, std::span<const Eigen::Vector3d> r, double d,
              DistanceMode mode = DistanceMode::Squared);

double shape_code_loss(const Eigen::VectorXd &pred, const Eigen::VectorXd &gt);

struct CategoryMetrics {
    std::map<double, double> ap;      // keyed by IoU threshold
    std::map<double, double> recall;
    std::size_t gt_count = 0;
    std::size_t det_count = 0;
};

struct DetectionReport {
    std::map<int, CategoryMetrics> per_category;
    std::map<double, double> mean_ap;
    std::map<double, double> mean_recall;
};

/// Per-category AP and recall; categories are those present in the ground truth.
DetectionReport evaluate_detections(std::span<const OrientedBox> detections, std::span<const OrientedBox> gts,
                                    const EvalConfig &config);

}  // namespace psdet
