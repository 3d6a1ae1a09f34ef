#include "oracles.hpp"
#include "psdet/camera.hpp"

#include <doctest.h>

#include <random>

using namespace psdet;

namespace {

Intrinsicsd test_camera() {
    Intrinsicsd K;
    K.fx = K.fy = 100;
    K.cx = K.cy = 50;
    K.width = K.height = 101;
    return K;
}

Posed random_pose(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    Posed p;
    p.rotation = oracle::random_rotation(rng);
    p.translation = {U(rng), U(rng), U(rng)};
    return p;
}

}  // namespace

TEST_SUITE("camera") {

TEST_CASE("project examples") {
    const auto K = test_camera();
    auto a = project<double>({0, 0, 2}, K, Posed::Identity());
    REQUIRE(a);
    CHECK(a->u == 50.0);
    CHECK(a->v == 50.0);
    CHECK(a->depth == 2.0);

    auto b = project<double>({1, 0, 2}, K, Posed::Identity());
    REQUIRE(b);
    CHECK(b->u == 100.0);
    CHECK(b->v == 50.0);

    CHECK_FALSE(project<double>({0, 0, -1}, K, Posed::Identity()));
    CHECK_FALSE(project<double>({0, 0, 1e-6}, K, Posed::Identity()));
    CHECK(project<double>({0, 0, 2e-6}, K, Posed::Identity()));
}

TEST_CASE("backproject examples") {
    const auto K = test_camera();
    CHECK(backproject(50.0, 50.0, 2.0, K, Posed::Identity()).isApprox(Eigen::Vector3d(0, 0, 2)));
    CHECK(backproject(100.0, 50.0, 2.0, K, Posed::Identity()).isApprox(Eigen::Vector3d(1, 0, 2)));
    CHECK_THROWS_AS(backproject(1.0, 1.0, 0.0, K, Posed::Identity()), std::invalid_argument);
    CHECK_THROWS_AS(backproject(1.0, 1.0, -1.0, K, Posed::Identity()), std::invalid_argument);
}

TEST_CASE("round trip over random poses") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const auto K = test_camera();
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const Posed pose = random_pose(rng);
        const double u = 100 * U(rng), v = 100 * U(rng), d = 0.1 + 9.9 * U(rng);
        const auto p = project(backproject(u, v, d, K, pose), K, pose);
        REQUIRE(p);
        worst = std::max({worst, std::abs(p->u - u), std::abs(p->v - v), std::abs(p->depth - d)});
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("pose composition matches projecting the inverse-transformed point") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    const auto K = test_camera();
    for (int i = 0; i < 200; ++i) {
        const Posed pose = random_pose(rng);
        const Eigen::Vector3d x(U(rng), U(rng), U(rng));
        const auto a = project(x, K, pose);
        const auto b = project<double>(pose.inverse().to_world(x), K, Posed::Identity());
        REQUIRE(a.has_value() == b.has_value());
        if (a) {
            CHECK(std::abs(a->u - b->u) < 1e-9);
            CHECK(std::abs(a->v - b->v) < 1e-9);
            CHECK(std::abs(a->depth - b->depth) < 1e-9);
        }
        CHECK(pose.compose(pose.inverse()).rotation.isIdentity(1e-12));
    }
}

TEST_CASE("project is absent iff camera z <= eps") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const auto K = test_camera();
    for (int i = 0; i < 5000; ++i) {
        const Posed pose = random_pose(rng);
        const Eigen::Vector3d x = pose.translation + Eigen::Vector3d(U(rng), U(rng), U(rng));
        const double z = (pose.rotation.transpose() * (x - pose.translation)).z();
        CHECK(project(x, K, pose).has_value() == (z > kBehindCameraEps));
    }
}

TEST_CASE("pixel rays") {
    const auto K = test_camera();
    const auto center = pixel_ray(50.0, 50.0, K, Posed::Identity());
    CHECK(center.direction.isApprox(Eigen::Vector3d::UnitZ()));
    const auto r = pixel_ray(100.0, 50.0, K, Posed::Identity());
    CHECK(r.direction.isApprox(Eigen::Vector3d(0.5, 0, 1).normalized()));
    CHECK(std::abs(r.direction.norm() - 1.0) < 1e-12);
    CHECK(r.direction.cross(center.direction).norm() > 1e-3);

    std::mt19937_64 rng(4);
    const Posed pose = random_pose(rng);
    const auto ray = pixel_ray(12.5, 80.25, K, pose);
    const double dz = (pose.rotation.transpose() * ray.direction).z();
    CHECK((ray.origin + 3.0 * ray.direction / dz).isApprox(backproject(12.5, 80.25, 3.0, K, pose), 1e-12));
}

TEST_CASE("look_at builds a valid pose facing the target") {
    const Posed p = look_at<double>({3, 0, 1.5}, {0, 0, 0.3});
    CHECK(p.valid());
    const Eigen::Vector3d forward = p.rotation.col(2);
    CHECK(forward.isApprox((Eigen::Vector3d(0, 0, 0.3) - Eigen::Vector3d(3, 0, 1.5)).normalized()));
    CHECK(p.rotation.col(1).z() < 0);  // image down points toward world down
    const auto proj = project<double>({0, 0, 0.3}, test_camera(), p);
    REQUIRE(proj);
    CHECK(proj->u == doctest::Approx(50.0));
    CHECK(proj->v == doctest::Approx(50.0));
}

TEST_CASE("intrinsics and pose validity") {
    auto K = test_camera();
    CHECK(K.valid());
    K.cx = 101;
    CHECK_FALSE(K.valid());
    Posed p;
    p.rotation(0, 0) = -1;
    CHECK_FALSE(p.valid());
}

TEST_CASE("relative rotation angle") {
    Posed a, b;
    b.rotation = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitY()).toRotationMatrix();
    CHECK(relative_rotation_angle(a, b) == doctest::Approx(0.3).epsilon(1e-12));
}

}
