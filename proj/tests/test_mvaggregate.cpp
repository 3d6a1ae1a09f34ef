#include "oracles.hpp"
#include "psdet/mvaggregate.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace psdet;

namespace {

ProjectionSet make_set(const std::vector<Eigen::VectorXd> &rows, const std::vector<bool> &mask) {
    ProjectionSet s;
    const auto n = static_cast<Eigen::Index>(rows.size());
    s.pixels = Eigen::MatrixX2d::Zero(n, 2);
    s.mask.resize(n);
    s.features = Eigen::MatrixXd::Zero(n, rows.empty() ? 0 : rows[0].size());
    for (Eigen::Index i = 0; i < n; ++i) {
        s.mask(i) = mask[static_cast<std::size_t>(i)];
        if (s.mask(i)) s.features.row(i) = rows[static_cast<std::size_t>(i)].transpose();
    }
    return s;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("mvaggregate") {

TEST_CASE("bilinear sampling") {
    FeatureMap m(2, 2, 1);
    m.at(0, 0, 0) = 0;
    m.at(1, 0, 0) = 1;
    m.at(0, 1, 0) = 2;
    m.at(1, 1, 0) = 3;
    CHECK(bilinear_sample(m, 0.5, 0.5)(0) == doctest::Approx(1.5));
    CHECK(bilinear_sample(m, 1.0, 0.0)(0) == 1.0);
    CHECK(bilinear_sample(m, 1.0, 1.0)(0) == 3.0);
    const FeatureMap c(7, 5, 3, 0.25);
    CHECK(bilinear_sample(c, 3.3, 2.9).isApprox(Eigen::Vector3d::Constant(0.25)));
}

TEST_CASE("mean and variance examples") {
    const auto s = make_set({vec({1, 3}), vec({3, 5})}, {true, true});
    const MaskedMean m = aggregate_mean(s);
    CHECK_FALSE(m.degenerate);
    CHECK(m.value.isApprox(vec({2, 4})));
    CHECK(aggregate_variance(s).isApprox(vec({1, 1})));

    const auto one = make_set({vec({1, 3}), vec({3, 5})}, {false, true});
    CHECK(aggregate_mean(one).value == vec({3, 5}));
    CHECK(aggregate_variance(one).isZero());

    const auto none = make_set({vec({1, 3}), vec({3, 5})}, {false, false});
    CHECK(aggregate_mean(none).degenerate);
    CHECK(aggregate_mean(none).value.isZero());

    const auto same = make_set({vec({0.2, 0.7}), vec({0.2, 0.7}), vec({0.2, 0.7})}, {true, true, true});
    CHECK(aggregate_variance(same).isZero(0));
}

TEST_CASE("masked-off rows do not influence the result") {
    auto s = make_set({vec({1, 3}), vec({3, 5}), vec({100, 100})}, {true, true, false});
    s.features.row(2) << 100, 100;
    CHECK(aggregate_mean(s).value.isApprox(vec({2, 4})));
    CHECK(aggregate_variance(s).isApprox(vec({1, 1})));
}

TEST_CASE("permutation and duplication invariance, variance identity") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 30), C = 3;
        std::vector<Eigen::VectorXd> rows;
        std::vector<bool> mask;
        for (int i = 0; i < n; ++i) {
            rows.push_back(Eigen::Vector3d(U(rng), U(rng), U(rng)));
            mask.push_back(U(rng) < 0.7);
        }
        mask[0] = true;
        const auto base = make_set(rows, mask);
        const Eigen::VectorXd mean = aggregate_mean(base).value, var = aggregate_variance(base);

        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Eigen::VectorXd> prow;
        std::vector<bool> pmask;
        for (int i : perm) {
            prow.push_back(rows[static_cast<std::size_t>(i)]);
            pmask.push_back(mask[static_cast<std::size_t>(i)]);
        }
        const auto permuted = make_set(prow, pmask);
        CHECK((aggregate_mean(permuted).value - mean).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((aggregate_variance(permuted) - var).cwiseAbs().maxCoeff() <= 1e-12);

        auto drow = rows;
        auto dmask = mask;
        drow.insert(drow.end(), rows.begin(), rows.end());
        dmask.insert(dmask.end(), mask.begin(), mask.end());
        const auto doubled = make_set(drow, dmask);
        CHECK((aggregate_mean(doubled).value - mean).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((aggregate_variance(doubled) - var).cwiseAbs().maxCoeff() <= 1e-12);

        Eigen::VectorXd sum = Eigen::VectorXd::Zero(C), sum2 = Eigen::VectorXd::Zero(C);
        int k = 0;
        for (int i = 0; i < n; ++i)
            if (mask[static_cast<std::size_t>(i)]) {
                sum += rows[static_cast<std::size_t>(i)];
                sum2 += rows[static_cast<std::size_t>(i)].cwiseAbs2();
                ++k;
            }
        const Eigen::VectorXd identity = sum2 / k - (sum / k).cwiseAbs2();
        CHECK((var - identity).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((var.array() >= 0).all());
    }
}

TEST_CASE("one-hot append") {
    CHECK(append_onehot(vec({5, 6}), 1, 3) == vec({5, 6, 0, 1, 0}));
    CHECK(append_onehot(vec({5, 6}), std::nullopt, 3) == vec({5, 6, 0, 0, 0}));
    CHECK(append_onehot(vec({5, 6}), 0, 1) == vec({5, 6, 1}));
    CHECK_THROWS_AS(append_onehot(vec({5, 6}), 3, 3), std::invalid_argument);
    CHECK_THROWS_AS(append_onehot(vec({5, 6}), -1, 3), std::invalid_argument);
}

TEST_CASE("projection mask agrees with the camera model") {
    const SceneSpec scene = demo_scene();
    std::vector<CameraFrame> frames;
    for (std::size_t i = 0; i < 5; ++i) frames.push_back(render_frame(scene, 4 * i, 16));

    const auto behind = build_projection_set({0, 0, 50}, frames);
    CHECK(behind.valid_count() == 0);

    const auto &f0 = frames[0];
    const Eigen::Vector3d on_axis = backproject(f0.intrinsics.cx, f0.intrinsics.cy, 2.5, f0.intrinsics, f0.pose);
    const auto axis_set = build_projection_set(on_axis, frames);
    CHECK(axis_set.mask(0));
    CHECK(axis_set.pixels(0, 0) == doctest::Approx(f0.intrinsics.cx));
    CHECK(axis_set.pixels(0, 1) == doctest::Approx(f0.intrinsics.cy));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    bool saw_partial = false;
    for (int t = 0; t < 500; ++t) {
        const Eigen::Vector3d x(U(rng), U(rng), U(rng) / 2);
        const auto set = build_projection_set(x, frames);
        int expected = 0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto p = project(x, frames[i].intrinsics, frames[i].pose);
            const bool visible = p && frames[i].intrinsics.contains(p->u, p->v);
            expected += visible;
            CHECK(set.mask(static_cast<Eigen::Index>(i)) == visible);
            if (!visible) CHECK(set.features.row(static_cast<Eigen::Index>(i)).isZero(0));
        }
        CHECK(set.valid_count() == expected);
        saw_partial |= expected == 3;
    }
    CHECK(saw_partial);
}

TEST_CASE("occlusion check drops projections behind the observed surface") {
    const SceneSpec scene = demo_scene();
    std::vector<CameraFrame> frames{render_frame(scene, 0, 16)};
    const auto &f = frames[0];
    int u = -1, v = 60;
    for (int du = 0; du < 80 && u < 0; ++du)
        for (int c : {80 - du, 80 + du})
            if (u < 0 && f.depth(v, c) > 0) u = c;
    REQUIRE(u >= 0);
    const Eigen::Vector3d hidden = backproject<double>(u, v, f.depth(v, u) + 0.5, f.intrinsics, f.pose);
    CHECK(build_projection_set(hidden, frames).valid_count() == 1);
    AggregateOptions opt;
    opt.occlusion_check = true;
    opt.occlusion_tolerance = 0.05;
    CHECK(build_projection_set(hidden, frames, opt).valid_count() == 0);
    const Eigen::Vector3d seen = backproject<double>(u, v, f.depth(v, u), f.intrinsics, f.pose);
    CHECK(build_projection_set(seen, frames, opt).valid_count() == 1);
}

TEST_CASE("aggregate cloud layout") {
    const SceneSpec scene = demo_scene();
    std::vector<CameraFrame> frames;
    for (std::size_t i = 0; i < scene.cameras.size(); i += 2) frames.push_back(render_frame(scene, i, 16));
    Scatterer s(ScatterConfig{});
    s.scatter_frame(frames[0], 0);
    ScatterCloud cloud = s.release();
    aggregate_cloud(cloud, frames, 3);
    CHECK(cloud.layout.channels == 3);
    CHECK(cloud.features.cols() == 9);
    for (Eigen::Index i = 0; i < cloud.features.rows(); ++i) {
        CHECK(cloud.features.row(i).tail(3).sum() == 1.0);
        CHECK(cloud.features(i, 6 + cloud.points[static_cast<std::size_t>(i)].source_box_category) == 1.0);
        CHECK(cloud.valid_counts(i) >= 1);
        CHECK((cloud.features.row(i).segment(3, 3).array() >= 0).all());
    }
}

TEST_CASE("surface points are more photo-consistent than free-space points") {
    const SceneSpec scene = demo_scene();
    std::vector<CameraFrame> frames;
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) frames.push_back(render_frame(scene, i, 16));
    Scatterer s(ScatterConfig{});
    for (std::size_t i = 0; i < frames.size(); ++i) s.scatter_frame(frames[i], static_cast<int>(i));
    ScatterCloud cloud = cap_points(s.cloud(), 1000, 1);
    REQUIRE(cloud.size() == 1000);

    std::mt19937_64 rng(12);
    const Eigen::AlignedBox3d b = scene.bounds();
    std::uniform_real_distribution<double> ux(b.min().x(), b.max().x()), uy(b.min().y(), b.max().y()),
        uz(b.min().z(), b.max().z());
    std::vector<double> inlier_var, free_var;
    for (const auto &p : cloud.points) {
        const auto set = build_projection_set(p.position, frames);
        if (set.valid_count() >= 2) inlier_var.push_back(aggregate_variance(set).mean());
    }
    const TriangleMesh tris = scene.triangles();
    while (free_var.size() < 1000) {
        const Eigen::Vector3d x(ux(rng), uy(rng), uz(rng));
        if (point_mesh_distance(x, tris) < 0.1) continue;
        const auto set = build_projection_set(x, frames);
        if (set.valid_count() >= 2) free_var.push_back(aggregate_variance(set).mean());
    }
    CHECK(median(inlier_var) < median(free_var));
}

TEST_CASE("pairwise sum") {
    std::vector<double> v(1000, 0.1);
    CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

}
