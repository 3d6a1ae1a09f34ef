#include "psdet/evalmetrics.hpp"

#include "psdet/spatial.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace psdet {

void EvalConfig::validate() const {
    for (double t : iou_thresholds)
        if (!(t > 0 && t < 1)) throw std::invalid_argument("eval: IoU thresholds must lie in (0,1)");
    if (!(fscore_threshold > 0)) throw std::invalid_argument("eval: fscore threshold must be positive");
    if (sample_count < 1) throw std::invalid_argument("eval: sample_count must be >= 1");
}

namespace {

std::vector<std::size_t> score_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

MatchResult match_detections(std::span<const OrientedBox> detections, std::span<const OrientedBox> gts,
                             double iou_threshold) {
    std::vector<double> scores;
    for (const auto &d : detections) scores.push_back(d.score);
    MatchResult out;
    out.order = score_order(scores);
    std::vector<bool> used(gts.size(), false);
    for (std::size_t i : out.order) {
        int best = -1;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || gts[g].category != detections[i].category) continue;
            const double iou = iou_3d(detections[i], gts[g]);
            if (iou >= iou_threshold && iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) used[static_cast<std::size_t>(best)] = true;
        out.tp.push_back(best >= 0);
        out.scores.push_back(detections[i].score);
        out.matched_gt.push_back(best);
    }
    return out;
}

PRCurve pr_curve(const std::vector<bool> &tp, std::span<const double> scores, std::size_t gt_count) {
    if (gt_count == 0) throw std::invalid_argument("pr_curve: gt_count must be >= 1");
    if (tp.size() != scores.size()) throw std::invalid_argument("pr_curve: flags/scores length mismatch");
    PRCurve curve;
    std::size_t hits = 0, seen = 0;
    for (std::size_t i : score_order(scores)) {
        ++seen;
        if (tp[i]) ++hits;
        curve.push_back({static_cast<double>(hits) / static_cast<double>(gt_count),
                         static_cast<double>(hits) / static_cast<double>(seen)});
    }
    return curve;
}

double average_precision_11pt(const std::vector<bool> &tp, std::span<const double> scores, std::size_t gt_count) {
    const PRCurve curve = pr_curve(tp, scores, gt_count);
    double sum = 0.0;
    for (int level = 0; level <= 10; ++level) {
        const double r = level / 10.0;
        double best = 0.0;
        for (const auto &pt : curve)
            if (pt.recall >= r) best = std::max(best, pt.precision);
        sum += best;
    }
    return sum / 11.0;
}

double recall_at(const std::vector<bool> &tp, std::size_t gt_count) {
    if (gt_count == 0) throw std::invalid_argument("recall_at: gt_count must be >= 1");
    return static_cast<double>(std::count(tp.begin(), tp.end(), true)) / static_cast<double>(gt_count);
}

namespace {

Eigen::VectorXd nn_squared_distances(std::span<const Eigen::Vector3d> from, const KdTree &to) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(from.size()));
    for (std::size_t i = 0; i < from.size(); ++i) d(static_cast<Eigen::Index>(i)) = to.nearest(from[i]).squared_distance;
    return d;
}

}  // namespace

double chamfer(std::span<const Eigen::Vector3d> g, std::span<const Eigen::Vector3d> r) {
    if (g.empty() || r.empty()) throw std::invalid_argument("chamfer: empty point set");
    const KdTree tg(g), tr(r);
    return nn_squared_distances(g, tr).mean() + nn_squared_distances(r, tg).mean();
}

double fscore(std::span<const Eigen::Vector3d> g, std::span<const Eigen::Vector3d> r, double d, DistanceMode mode) {
    if (g.empty() || r.empty()) throw std::invalid_argument("fscore: empty point set");
    if (!(d > 0)) throw std::invalid_argument("fscore: threshold must be positive");
    const KdTree tg(g), tr(r);
    const double limit = mode == DistanceMode::Squared ? d : d * d;
    const double precision = (nn_squared_distances(r, tg).array() < limit).cast<double>().mean();
    const double recall = (nn_squared_distances(g, tr).array() < limit).cast<double>().mean();
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double shape_code_loss(const Eigen::VectorXd &pred, const Eigen::VectorXd &gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("shape_code_loss: length mismatch");
    return (pred - gt).squaredNorm();
}

DetectionReport evaluate_detections(std::span<const OrientedBox> detections, std::span<const OrientedBox> gts,
                                    const EvalConfig &config) {
    config.validate();
    std::set<int> categories;
    for (const auto &g : gts) categories.insert(g.category);
    DetectionReport report;
    for (int c : categories) {
        std::vector<OrientedBox> dets, truth;
        for (const auto &d : detections)
            if (d.category == c) dets.push_back(d);
        for (const auto &g : gts)
            if (g.category == c) truth.push_back(g);
        CategoryMetrics &m = report.per_category[c];
        m.gt_count = truth.size();
        m.det_count = dets.size();
        for (double t : config.iou_thresholds) {
            const MatchResult match = match_detections(dets, truth, t);
            m.ap[t] = average_precision_11pt(match.tp, match.scores, truth.size());
            m.recall[t] = recall_at(match.tp, truth.size());
        }
    }
    for (double t : config.iou_thresholds) {
        double ap = 0.0, rec = 0.0;
        for (const auto &[c, m] : report.per_category) {
            ap += m.ap.at(t);
            rec += m.recall.at(t);
        }
        const double n = std::max<std::size_t>(1, report.per_category.size());
        report.mean_ap[t] = ap / n;
        report.mean_recall[t] = rec / n;
    }
    return report;
}

}  // namespace psdet
