#include "oracles.hpp"
#include "psdet/evalmetrics.hpp"
#include "psdet/mesh.hpp"

#include <doctest.h>

#include <random>

using namespace psdet;

namespace {

std::vector<double> descending(std::size_t n) {
    std::vector<double> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(1.0 - 0.1 * static_cast<double>(i));
    return s;
}

}  // namespace

TEST_SUITE("evalmetrics") {

TEST_CASE("matching") {
    const OrientedBox gt = make_box({0, 0, 0}, {1, 1, 1});
    OrientedBox d = gt;
    d.score = 0.9;
    CHECK(match_detections(std::vector{d}, std::vector{gt}, 0.25).tp == std::vector<bool>{true});

    OrientedBox d2 = gt;
    d2.score = 0.5;
    const auto m = match_detections(std::vector{d2, d}, std::vector{gt}, 0.25);
    CHECK(m.tp == std::vector<bool>{true, false});
    CHECK(m.order == std::vector<std::size_t>{1, 0});
    CHECK(m.matched_gt == std::vector<int>{0, -1});

    // IoU of a unit cube shifted by 2/3 is 0.2.
    const OrientedBox weak = make_box({2.0 / 3.0, 0, 0}, {1, 1, 1});
    CHECK(iou_3d(weak, gt) == doctest::Approx(0.2));
    CHECK(match_detections(std::vector{weak}, std::vector{gt}, 0.25).tp == std::vector<bool>{false});

    OrientedBox wrong_class = gt;
    wrong_class.category = 1;
    CHECK(match_detections(std::vector{wrong_class}, std::vector{gt}, 0.25).tp == std::vector<bool>{false});
}

TEST_CASE("matching prefers the highest-IoU unmatched ground truth") {
    const OrientedBox g0 = make_box({0, 0, 0}, {1, 1, 1}), g1 = make_box({0.3, 0, 0}, {1, 1, 1});
    const OrientedBox d = make_box({0.25, 0, 0}, {1, 1, 1}, 0, 0, 0.9);
    const auto m = match_detections(std::vector{d}, std::vector{g0, g1}, 0.25);
    CHECK(m.matched_gt == std::vector<int>{1});
}

TEST_CASE("AP fixtures") {
    CHECK(average_precision_11pt({true}, std::vector<double>{0.9}, 1) == 1.0);
    CHECK(average_precision_11pt({false, true}, std::vector<double>{0.9, 0.8}, 1) == 0.5);
    CHECK(average_precision_11pt({true, false}, std::vector<double>{0.9, 0.8}, 1) == 1.0);
    CHECK(average_precision_11pt({}, std::vector<double>{}, 2) == 0.0);
    CHECK(average_precision_11pt({true, false}, std::vector<double>{0.1, 0.8}, 1) == 0.5);
    CHECK_THROWS_AS(average_precision_11pt({true}, std::vector<double>{0.9}, 0), std::invalid_argument);
}

TEST_CASE("recall") {
    CHECK(recall_at({true}, 2) == 0.5);
    CHECK(recall_at({true, true}, 2) == 1.0);
    CHECK(recall_at({}, 2) == 0.0);
}

TEST_CASE("AP matches the exact brute-force reference on all small configurations") {
    for (std::size_t n = 0; n <= 6; ++n)
        for (std::int64_t gt = 1; gt <= 3; ++gt)
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                std::vector<bool> tp;
                for (std::size_t i = 0; i < n; ++i) tp.push_back(mask >> i & 1u);
                if (std::count(tp.begin(), tp.end(), true) > gt) continue;
                const double ap = average_precision_11pt(tp, descending(n), static_cast<std::size_t>(gt));
                const oracle::Rational exact = oracle::brute_ap_11pt(tp, gt);
                CHECK(std::abs(ap - exact.value()) <= 4 * std::numeric_limits<double>::epsilon());
            }
}

TEST_CASE("PR curve") {
    const auto c = pr_curve({true, false, true}, std::vector<double>{0.9, 0.8, 0.7}, 4);
    REQUIRE(c.size() == 3);
    CHECK(c[0].recall == 0.25);
    CHECK(c[1].precision == 0.5);
    CHECK(c[2].recall == 0.5);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i].recall >= c[i - 1].recall);
}

TEST_CASE("chamfer") {
    const std::vector<Eigen::Vector3d> g{{0, 0, 0}}, r{{1, 0, 0}};
    CHECK(chamfer(g, r) == 2.0);
    CHECK(chamfer(g, g) == 0.0);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<Eigen::Vector3d> a, b;
    for (int i = 0; i < 300; ++i) a.emplace_back(U(rng), U(rng), U(rng));
    for (int i = 0; i < 200; ++i) b.emplace_back(U(rng), U(rng), U(rng));
    CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)).epsilon(1e-14));
    double ref = 0;
    for (const auto &p : a) ref += oracle::brute_nearest_sq(p, b) / a.size();
    double ref2 = 0;
    for (const auto &q : b) ref2 += oracle::brute_nearest_sq(q, a) / b.size();
    CHECK(chamfer(a, b) == doctest::Approx(ref + ref2).epsilon(1e-12));
    CHECK_THROWS_AS(chamfer(a, std::vector<Eigen::Vector3d>{}), std::invalid_argument);
}

TEST_CASE("chamfer is zero exactly for equal multisets") {
    const std::vector<Eigen::Vector3d> a{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const std::vector<Eigen::Vector3d> perm{{0, 1, 0}, {0, 0, 0}, {1, 0, 0}};
    CHECK(chamfer(a, perm) == 0.0);
    const std::vector<Eigen::Vector3d> moved{{0, 1, 0}, {0, 0, 0}, {1, 0, 1e-3}};
    CHECK(chamfer(a, moved) > 0.0);
}

TEST_CASE("fscore") {
    const std::vector<Eigen::Vector3d> g{{0, 0, 0}};
    CHECK(fscore(g, g, 0.004) == 100.0);
    CHECK(fscore(g, std::vector<Eigen::Vector3d>{{1, 0, 0}}, 0.004) == 0.0);
    CHECK(fscore(g, std::vector<Eigen::Vector3d>{{0.05, 0, 0}}, 0.004) == 100.0);
    CHECK(fscore(g, std::vector<Eigen::Vector3d>{{0.05, 0, 0}}, 0.004, DistanceMode::Unsquared) == 0.0);
    CHECK(fscore(g, std::vector<Eigen::Vector3d>{{0.05, 0, 0}}, 0.06, DistanceMode::Unsquared) == 100.0);
    CHECK_THROWS_AS(fscore(g, g, 0.0), std::invalid_argument);
}

TEST_CASE("fscore is monotone in the threshold") {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> N(0, 0.05);
    std::vector<Eigen::Vector3d> a, b;
    for (int i = 0; i < 400; ++i) {
        a.emplace_back(i * 0.01, 0, 0);
        b.emplace_back(i * 0.01 + N(rng), N(rng), N(rng));
    }
    double prev = -1;
    for (double d : {1e-5, 1e-4, 5e-4, 1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2, 1.0}) {
        const double f = fscore(a, b, d);
        CHECK(f >= prev);
        prev = f;
    }
}

TEST_CASE("chamfer between two samples of one mesh is small") {
    const TriangleMesh mesh = box_mesh(make_box({0, 0, 0}, {0.6, 0.5, 0.7}));
    const auto a = sample_surface(mesh, 2048, 1), b = sample_surface(mesh, 2048, 2);
    double spacing = 0;
    for (const auto &p : a) {
        double best = 1e300;
        for (const auto &q : a)
            if (&p != &q) best = std::min(best, (p - q).norm());
        spacing += best / a.size();
    }
    CHECK(chamfer(a, b) < 4 * spacing * spacing);
}

TEST_CASE("shape code loss") {
    CHECK(shape_code_loss(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)) == 0.0);
    CHECK(shape_code_loss(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0)) == 1.0);
    CHECK(shape_code_loss(Eigen::Vector2d(3, 4), Eigen::Vector2d(0, 0)) == 25.0);
    CHECK_THROWS_AS(shape_code_loss(Eigen::Vector2d(3, 4), Eigen::Vector3d(0, 0, 0)), std::invalid_argument);
}

TEST_CASE("per-category evaluation") {
    std::vector<OrientedBox> gts{make_box({0, 0, 0}, {1, 1, 1}, 0, 0), make_box({3, 0, 0}, {1, 1, 1}, 0, 1)};
    std::vector<OrientedBox> dets = gts;
    for (auto &d : dets) d.score = 0.9;
    dets.push_back(make_box({6, 0, 0}, {1, 1, 1}, 0, 1, 0.95));
    const DetectionReport r = evaluate_detections(dets, gts, EvalConfig{});
    CHECK(r.per_category.at(0).ap.at(0.5) == 1.0);
    CHECK(r.per_category.at(1).ap.at(0.5) == 0.5);
    CHECK(r.per_category.at(1).recall.at(0.25) == 1.0);
    CHECK(r.mean_ap.at(0.5) == 0.75);
    CHECK(r.per_category.at(1).det_count == 2);
    EvalConfig bad;
    bad.iou_thresholds = {1.5};
    CHECK_THROWS_AS(evaluate_detections(dets, gts, bad), std::invalid_argument);
}

}
