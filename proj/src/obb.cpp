#include "psdet/obb.hpp"

#include "psdet/focal.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace psdet {

Eigen::Matrix<double, 7, 1> OrientedBox::params() const {
    Eigen::Matrix<double, 7, 1> p;
    p << center, size, yaw;
    return p;
}

OrientedBox OrientedBox::from_params(const Eigen::Matrix<double, 7, 1> &p, int category, double score) {
    return make_box(p.head<3>(), p.segment<3>(3), p(6), category, score);
}

Eigen::Vector3d OrientedBox::to_local(const Eigen::Vector3d &world) const {
    const Eigen::Vector3d d = world - center;
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

bool OrientedBox::contains(const Eigen::Vector3d &world) const {
    return (to_local(world).cwiseAbs().array() <= 0.5 * size.array()).all();
}

OrientedBox make_box(const Eigen::Vector3d &center, const Eigen::Vector3d &size, double yaw, int category,
                     double score) {
    OrientedBox box{center, size, wrap_angle(yaw), category, score};
    if (!box.valid()) throw std::invalid_argument("make_box: sizes must be positive and finite");
    return box;
}

std::array<Eigen::Vector2d, 4> box_footprint(const OrientedBox &box) {
    const double c = std::cos(box.yaw), s = std::sin(box.yaw);
    const Eigen::Vector2d ax{c, s}, ay{-s, c};
    const Eigen::Vector2d ctr = box.center.head<2>();
    const double hw = 0.5 * box.size.x(), hh = 0.5 * box.size.y();
    return {ctr - hw * ax - hh * ay, ctr + hw * ax - hh * ay, ctr + hw * ax + hh * ay, ctr - hw * ax + hh * ay};
}

std::array<Eigen::Vector3d, 8> box_corners(const OrientedBox &box) {
    const auto fp = box_footprint(box);
    const double z0 = box.center.z() - 0.5 * box.size.z();
    const double z1 = box.center.z() + 0.5 * box.size.z();
    std::array<Eigen::Vector3d, 8> corners;
    for (int i = 0; i < 4; ++i) {
        corners[i] = {fp[i].x(), fp[i].y(), z0};
        corners[i + 4] = {fp[i].x(), fp[i].y(), z1};
    }
    return corners;
}

namespace {

double cross2(const Eigen::Vector2d &a, const Eigen::Vector2d &b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

std::vector<Eigen::Vector2d> clip_convex_polygon(std::span<const Eigen::Vector2d> subject,
                                                 std::span<const Eigen::Vector2d> clip) {
    std::vector<Eigen::Vector2d> output(subject.begin(), subject.end());
    std::vector<Eigen::Vector2d> input;
    for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
        const Eigen::Vector2d &a = clip[e];
        const Eigen::Vector2d &b = clip[(e + 1) % clip.size()];
        const Eigen::Vector2d edge = b - a;
        input.swap(output);
        output.clear();
        for (std::size_t i = 0; i < input.size(); ++i) {
            const Eigen::Vector2d &p = input[i];
            const Eigen::Vector2d &q = input[(i + 1) % input.size()];
            const double sp = cross2(edge, p - a);
            const double sq = cross2(edge, q - a);
            if (sp >= 0) output.push_back(p);
            if ((sp >= 0) != (sq >= 0)) {
                const double t = sp / (sp - sq);
                output.push_back(p + t * (q - p));
            }
        }
    }
    return output;
}

double polygon_area(std::span<const Eigen::Vector2d> polygon) {
    double twice = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i)
        twice += cross2(polygon[i], polygon[(i + 1) % polygon.size()]);
    return 0.5 * twice;
}

double intersection_volume(const OrientedBox &a, const OrientedBox &b) {
    const double za0 = a.center.z() - 0.5 * a.size.z(), za1 = a.center.z() + 0.5 * a.size.z();
    const double zb0 = b.center.z() - 0.5 * b.size.z(), zb1 = b.center.z() + 0.5 * b.size.z();
    const double dz = std::min(za1, zb1) - std::max(za0, zb0);
    if (dz <= 0) return 0.0;
    // Cheap reject on circumscribed circles.
    const double ra = 0.5 * a.size.head<2>().norm(), rb = 0.5 * b.size.head<2>().norm();
    if ((a.center.head<2>() - b.center.head<2>()).norm() > ra + rb) return 0.0;
    const auto fa = box_footprint(a);
    const auto fb = box_footprint(b);
    const auto poly = clip_convex_polygon(fa, fb);
    if (poly.size() < 3) return 0.0;
    return std::max(0.0, polygon_area(poly)) * dz;
}

double iou_3d(const OrientedBox &a, const OrientedBox &b) {
    const double inter = intersection_volume(a, b);
    if (inter <= 0) return 0.0;
    const double uni = a.volume() + b.volume() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> nms_indices(std::span<const OrientedBox> boxes, double iou_threshold,
                                     bool cross_category) {
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return boxes[i].score > boxes[j].score; });
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        bool suppressed = false;
        for (std::size_t k : kept) {
            if (!cross_category && boxes[k].category != boxes[i].category) continue;
            if (iou_3d(boxes[k], boxes[i]) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(i);
    }
    return kept;
}

std::vector<OrientedBox> nms(std::span<const OrientedBox> boxes, double iou_threshold, bool cross_category) {
    std::vector<OrientedBox> out;
    for (std::size_t i : nms_indices(boxes, iou_threshold, cross_category)) out.push_back(boxes[i]);
    return out;
}

std::vector<int> assign_proposals(std::span<const Eigen::Vector3d> proposal_centers,
                                  std::span<const Eigen::Vector3d> gt_centers, double radius) {
    std::vector<int> out(proposal_centers.size(), -1);
    for (std::size_t i = 0; i < proposal_centers.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < gt_centers.size(); ++g) {
            const double d = (proposal_centers[i] - gt_centers[g]).norm();
            if (d < best) {
                best = d;
                out[i] = static_cast<int>(g);
            }
        }
        if (best > radius) out[i] = -1;
    }
    return out;
}

DetectionLoss detection_loss(const DetectionLossInputs &in) {
    DetectionLoss loss;
    if (!in.votes.empty()) {
        if (in.gt_centers.empty()) throw std::invalid_argument("detection_loss: votes without ground truth");
        for (const Vote &v : in.votes) {
            const Eigen::Vector3d *target = nullptr;
            double best = std::numeric_limits<double>::infinity();
            for (const auto &c : in.gt_centers) {
                const double d = (c - v.seed_position).squaredNorm();
                if (d < best) {
                    best = d;
                    target = &c;
                }
            }
            loss.vote_loss += smooth_l1(v.position() - *target);
        }
        loss.vote_loss /= static_cast<double>(in.votes.size());
    }

    if (static_cast<std::size_t>(in.class_probs.rows()) != in.class_labels.size())
        throw std::invalid_argument("detection_loss: class probs/labels length mismatch");
    if (!in.class_labels.empty()) {
        for (std::size_t i = 0; i < in.class_labels.size(); ++i) {
            const int label = in.class_labels[i];
            if (label < 0 || label >= in.class_probs.cols())
                throw std::invalid_argument("detection_loss: class label out of range");
            loss.cls_loss += focal_term(in.class_probs(static_cast<Eigen::Index>(i), label), true, in.gamma);
        }
        loss.cls_loss /= static_cast<double>(in.class_labels.size());
    }

    if (in.box_predictions.size() != in.box_targets.size())
        throw std::invalid_argument("detection_loss: box prediction/target length mismatch");
    if (!in.box_predictions.empty()) {
        for (std::size_t i = 0; i < in.box_predictions.size(); ++i) {
            Eigen::Matrix<double, 7, 1> r = in.box_predictions[i] - in.box_targets[i];
            r(6) = wrap_angle(r(6));
            loss.reg_loss += smooth_l1(r);
        }
        loss.reg_loss /= static_cast<double>(in.box_predictions.size());
    }
    loss.total = loss.vote_loss + loss.cls_loss + loss.reg_loss;
    return loss;
}

}  // namespace psdet
