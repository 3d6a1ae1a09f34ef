#include "oracles.hpp"
#include "psdet/mvaggregate.hpp"
#include "psdet/surfacefilter.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace psdet;

namespace {

SurfaceLabeling labels_of(std::initializer_list<bool> flags) {
    SurfaceLabeling l;
    l.labels = flags;
    l.distances = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flags.size()));
    return l;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("surfacefilter") {

TEST_CASE("labeling examples") {
    const std::vector<Eigen::Vector3d> gt{{0, 0, 0}, {1, 0, 0}};
    const std::vector<Eigen::Vector3d> pts{{0.02, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5, 0, 1.0}};
    const auto l = label_points(pts, gt, 0.05);
    CHECK(l.labels[0]);
    CHECK(l.labels[1]);
    CHECK(l.distances(1) == 0.0);
    CHECK_FALSE(l.labels[2]);
    CHECK(std::abs(l.distances(2) - 1.0) < 1e-9);
    CHECK_FALSE(l.labels[3]);
    CHECK(l.inlier_count() == 2);
    CHECK(l.outlier_fraction() == 0.5);
    CHECK_THROWS_AS(label_points(pts, std::vector<Eigen::Vector3d>{}, 0.05), std::invalid_argument);
}

TEST_CASE("labeling agrees with brute force") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<Eigen::Vector3d> gt, pts;
    for (int i = 0; i < 2000; ++i) gt.emplace_back(U(rng), U(rng), U(rng));
    for (int i = 0; i < 2000; ++i) pts.emplace_back(U(rng), U(rng), U(rng));
    const auto l = label_points(pts, gt, 0.08);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = oracle::brute_nearest(pts[i], gt);
        CHECK(l.distances(static_cast<Eigen::Index>(i)) == d);
        CHECK(l.labels[i] == (d < 0.08));
    }
}

TEST_CASE("ground-truth sample density") {
    const TriangleMesh mesh = box_mesh(make_box({0, 0, 0}, {1, 1, 1}));
    const auto s = sample_gt_surface(mesh, 0.05, 1);
    CHECK(s.size() >= static_cast<std::size_t>(6 * 4 / (0.05 * 0.05)));
    CHECK(s == sample_gt_surface(mesh, 0.05, 1));
}

TEST_CASE("focal loss examples") {
    Eigen::VectorXd p(1);
    p << 0.9;
    CHECK(focal_loss(p, labels_of({true}), 2.0) == doctest::Approx(0.01 * -std::log(0.9)).epsilon(1e-12));
    CHECK(focal_loss(p, labels_of({true}), 2.0) == doctest::Approx(1.0536e-3).epsilon(1e-4));
    p << 0.5;
    CHECK(focal_loss(p, labels_of({true}), 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    Eigen::VectorXd perfect(2);
    perfect << 1.0, 0.0;
    CHECK(focal_loss(perfect, labels_of({true, false}), 2.0) < 1e-5);
    CHECK_THROWS_AS(focal_loss(perfect, labels_of({true}), 2.0), std::invalid_argument);
}

TEST_CASE("focal loss with gamma 0 is binary cross-entropy") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> U(0.01, 0.99);
    Eigen::VectorXd p(100);
    SurfaceLabeling l;
    double bce = 0.0;
    for (int i = 0; i < 100; ++i) {
        p(i) = U(rng);
        l.labels.push_back(i % 3 == 0);
        bce += l.labels.back() ? -std::log(p(i)) : -std::log(1 - p(i));
    }
    CHECK(std::abs(focal_loss(p, l, 0.0) - bce / 100) < 1e-12);
}

TEST_CASE("focal loss monotonicity") {
    double prev_in = 1e300, prev_out = -1;
    for (int k = 1; k < 100; ++k) {
        Eigen::VectorXd p(1);
        p << k / 100.0;
        const double in = focal_loss(p, labels_of({true}), 2.0), out = focal_loss(p, labels_of({false}), 2.0);
        CHECK(in < prev_in);
        CHECK(out > prev_out);
        prev_in = in;
        prev_out = out;
    }
}

TEST_CASE("focal loss gradient matches central differences") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> U(0.02, 0.98);
    for (double gamma : {0.0, 1.0, 2.0, 3.5}) {
        Eigen::VectorXd p(30);
        SurfaceLabeling l;
        for (int i = 0; i < 30; ++i) {
            p(i) = U(rng);
            l.labels.push_back(rng() % 2);
        }
        const Eigen::VectorXd g = focal_loss_gradient(p, l, gamma);
        auto f = [&](const Eigen::VectorXd &x) { return focal_loss(x, l, gamma); };
        for (Eigen::Index i = 0; i < p.size(); ++i)
            CHECK(oracle::relative_error(g(i), oracle::central_difference(f, p, i, 1e-5)) < 1e-4);
    }
}

TEST_CASE("photometric score") {
    Eigen::MatrixXd var(4, 3);
    var << 0, 0, 0, 0.01, 0.01, 0.01, 0, 0, 0, 1, 1, 1;
    Eigen::VectorXi counts(4);
    counts << 5, 5, 1, 0;
    const Eigen::VectorXd s = photometric_score(var, counts, 0.01);
    CHECK(s(0) == 1.0);
    CHECK(s(1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(s(2) == kDefaultSurfaceScore);
    CHECK(s(3) == kDefaultSurfaceScore);
    CHECK_THROWS_AS(photometric_score(var, counts, 0.0), std::invalid_argument);
}

TEST_CASE("soft weighting scales only the aggregated block") {
    Eigen::MatrixXd f(3, 5);
    f << 2, 4, 1, 1, 1, 2, 4, 1, 0, 1, 2, 4, 1, 0, 0;
    Eigen::VectorXd s(3);
    s << 1.0, 0.0, 0.5;
    const Eigen::MatrixXd w = soft_weight(f, s, 3);
    CHECK(w.row(0) == f.row(0));
    CHECK(w.row(1).head(3).isZero());
    CHECK(w.row(1).tail(2) == f.row(1).tail(2));
    CHECK(w(2, 0) == 1.0);
    CHECK(w(2, 1) == 2.0);
    CHECK(w.row(2).tail(2) == f.row(2).tail(2));
    CHECK(soft_weight(f, Eigen::VectorXd::Ones(3), 3) == f);
}

TEST_CASE("noisy demo scene: inliers score higher and filtering removes outliers") {
    const SceneSpec scene = demo_scene();
    std::vector<CameraFrame> frames;
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
        CameraFrame f = render_frame(scene, i, 16);
        f.depth = perturb_depth(f.depth, 0.05, 0.1, 0.1, 10.0, 100 + i);
        frames.push_back(std::move(f));
    }
    Scatterer s(ScatterConfig{});
    for (std::size_t i = 0; i < frames.size(); ++i) s.scatter_frame(frames[i], static_cast<int>(i));
    ScatterCloud cloud = s.release();
    aggregate_cloud(cloud, frames, scene.category_count());
    const auto labels = label_points(cloud.positions(), sample_gt_surface(scene.triangles(), 0.05, 3), 0.05);
    const Eigen::VectorXd score = photometric_score(cloud, 0.01);

    std::vector<double> in, out;
    std::size_t kept = 0, kept_out = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double si = score(static_cast<Eigen::Index>(i));
        (labels.labels[i] ? in : out).push_back(si);
        if (si >= 0.5) {
            ++kept;
            kept_out += !labels.labels[i];
        }
    }
    REQUIRE_FALSE(in.empty());
    REQUIRE_FALSE(out.empty());
    CHECK(median(in) > median(out));
    REQUIRE(kept > 0);
    CHECK(static_cast<double>(kept_out) / kept < labels.outlier_fraction());
}

}
