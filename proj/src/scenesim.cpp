#include "psdet/scenesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace psdet {

namespace {

const Eigen::Vector3d kPalette[] = {
    {0.85, 0.30, 0.25}, {0.25, 0.70, 0.35}, {0.30, 0.40, 0.85}, {0.85, 0.75, 0.25},
    {0.70, 0.35, 0.80}, {0.25, 0.75, 0.80}, {0.90, 0.55, 0.30}, {0.55, 0.55, 0.55},
};

const Eigen::Vector3d kLightDir = Eigen::Vector3d(0.3, 0.5, 1.0).normalized();
constexpr double kTexturePeriod = 0.15;  // meters

double texture(const Eigen::Vector3d &local) {
    constexpr double k = 2.0 * std::numbers::pi / kTexturePeriod;
    const double t = (std::sin(k * local.x()) + std::sin(k * local.y() + 0.7) + std::sin(k * local.z() + 1.9)) / 3.0;
    return 0.6 + 0.4 * t;
}

Eigen::Vector3d background(const Eigen::Vector3d &dir) {
    const double az = std::atan2(dir.y(), dir.x());
    const double el = std::asin(std::clamp(dir.z(), -1.0, 1.0));
    const double a = std::sin(23.0 * az) * std::cos(17.0 * el);
    const double b = std::cos(11.0 * az + 29.0 * el);
    return {0.5 + 0.3 * a, 0.45 + 0.3 * b, 0.5 + 0.25 * a * b};
}

struct BoundingSphere {
    Eigen::Vector3d center;
    double radius;
};

BoundingSphere bounding_sphere(const SceneObject &obj) {
    Eigen::AlignedBox3d bb;
    for (const auto &t : obj.surface_mesh) {
        bb.extend(t.a);
        bb.extend(t.b);
        bb.extend(t.c);
    }
    return {bb.center(), 0.5 * bb.diagonal().norm() + 1e-9};
}

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    int object = -1;
    int triangle = -1;
};

Hit cast_ray(const SceneSpec &scene, std::span<const BoundingSphere> spheres, const Eigen::Vector3d &origin,
             const Eigen::Vector3d &direction) {
    Hit hit;
    const Eigen::Vector3d unit = direction.normalized();
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
        const Eigen::Vector3d oc = spheres[o].center - origin;
        const double along = oc.dot(unit);
        if ((oc - along * unit).squaredNorm() > spheres[o].radius * spheres[o].radius) continue;
        const auto &mesh = scene.objects[o].surface_mesh;
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            if (auto t = intersect_ray_triangle(origin, direction, mesh[i]); t && *t < hit.t) {
                hit.t = *t;
                hit.object = static_cast<int>(o);
                hit.triangle = static_cast<int>(i);
            }
        }
    }
    return hit;
}

void check_camera_index(const SceneSpec &scene, std::size_t camera_index) {
    if (camera_index >= scene.cameras.size()) throw std::out_of_range("camera index out of range");
}

}  // namespace

SceneObject make_object(const OrientedBox &box, std::size_t index) {
    SceneObject obj;
    obj.box = box;
    obj.surface_mesh = box_mesh(box);
    obj.albedo = kPalette[index % std::size(kPalette)];
    return obj;
}

void SceneSpec::validate() const {
    if (objects.empty()) throw std::invalid_argument("scene: at least one object required");
    if (cameras.empty()) throw std::invalid_argument("scene: at least one camera required");
    if (!(depth_noise_sigma >= 0)) throw std::invalid_argument("scene: depth_noise_sigma must be >= 0");
    if (!(outlier_rate >= 0 && outlier_rate <= 1)) throw std::invalid_argument("scene: outlier_rate must be in [0,1]");
    for (const auto &o : objects) {
        if (!o.box.valid()) throw std::invalid_argument("scene: invalid object box");
        if (o.category() < 0) throw std::invalid_argument("scene: negative category");
        OrientedBox inflated = o.box;
        inflated.size.array() += 2e-6;
        for (const auto &t : o.surface_mesh)
            if (!inflated.contains(t.a) || !inflated.contains(t.b) || !inflated.contains(t.c))
                throw std::invalid_argument("scene: mesh vertex outside its box");
    }
    for (const auto &c : cameras) {
        if (!c.intrinsics.valid()) throw std::invalid_argument("scene: invalid intrinsics");
        if (!c.pose.valid()) throw std::invalid_argument("scene: pose rotation is not a proper rotation");
    }
}

int SceneSpec::category_count() const {
    int k = 0;
    for (const auto &o : objects) k = std::max(k, o.category() + 1);
    return k;
}

std::vector<OrientedBox> SceneSpec::gt_boxes() const {
    std::vector<OrientedBox> out;
    for (const auto &o : objects) out.push_back(o.box);
    return out;
}

TriangleMesh SceneSpec::triangles() const {
    TriangleMesh out;
    for (const auto &o : objects) out.insert(out.end(), o.surface_mesh.begin(), o.surface_mesh.end());
    return out;
}

Eigen::AlignedBox3d SceneSpec::bounds() const {
    if (room_bounds) return *room_bounds;
    Eigen::AlignedBox3d bb;
    for (const auto &t : triangles()) {
        bb.extend(t.a);
        bb.extend(t.b);
        bb.extend(t.c);
    }
    return bb;
}

Intrinsicsd default_intrinsics() {
    Intrinsicsd K;
    K.width = 160;
    K.height = 120;
    K.fx = K.fy = 140.0;
    K.cx = 79.5;
    K.cy = 59.5;
    return K;
}

std::vector<CameraSpec> orbit_cameras(const OrbitTrajectory &orbit) {
    if (orbit.steps < 1) throw std::invalid_argument("orbit: steps must be >= 1");
    if (!(orbit.radius > 0)) throw std::invalid_argument("orbit: radius must be positive");
    std::vector<CameraSpec> cams;
    for (int i = 0; i < orbit.steps; ++i) {
        const double a = 2.0 * std::numbers::pi * i / orbit.steps;
        const Eigen::Vector3d eye =
            orbit.look_at + Eigen::Vector3d(orbit.radius * std::cos(a), orbit.radius * std::sin(a), orbit.height);
        cams.push_back({orbit.intrinsics, look_at<double>(eye, orbit.look_at)});
    }
    return cams;
}

DepthMap render_depth(const SceneSpec &scene, std::size_t camera_index) {
    return render_images(scene, camera_index).depth;
}

RenderedImages render_images(const SceneSpec &scene, std::size_t camera_index) {
    check_camera_index(scene, camera_index);
    const CameraSpec &cam = scene.cameras[camera_index];
    const Intrinsicsd &K = cam.intrinsics;
    std::vector<BoundingSphere> spheres;
    for (const auto &o : scene.objects) spheres.push_back(bounding_sphere(o));

    RenderedImages out{DepthMap::Zero(K.height, K.width), FeatureMap(K.width, K.height, 3)};
    for (int v = 0; v < K.height; ++v) {
        for (int u = 0; u < K.width; ++u) {
            // Camera-frame z of this direction is 1, so the hit parameter is the depth.
            const Eigen::Vector3d dir = cam.pose.rotation * unit_depth_ray<double>(u, v, K);
            const Hit hit = cast_ray(scene, spheres, cam.pose.translation, dir);
            Eigen::Vector3d rgb;
            if (hit.object < 0) {
                rgb = background(dir.normalized());
            } else {
                out.depth(v, u) = hit.t;
                const SceneObject &obj = scene.objects[static_cast<std::size_t>(hit.object)];
                const Eigen::Vector3d p = cam.pose.translation + hit.t * dir;
                const double shade =
                    0.35 + 0.65 * std::max(0.0, obj.surface_mesh[static_cast<std::size_t>(hit.triangle)].normal().dot(kLightDir));
                rgb = obj.albedo * texture(obj.box.to_local(p)) * shade;
            }
            out.color.texel(u, v) = rgb.cwiseMax(0.0).cwiseMin(1.0);
        }
    }
    return out;
}

DepthMap perturb_depth(const DepthMap &depth, double sigma, double outlier_rate, double d_min, double d_max,
                       std::uint64_t seed) {
    if (!(sigma >= 0)) throw std::invalid_argument("perturb_depth: sigma must be >= 0");
    if (!(d_min < d_max)) throw std::invalid_argument("perturb_depth: empty depth range");
    DepthMap out = depth;
    if (sigma == 0 && outlier_rate <= 0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> uniform_depth(d_min, d_max);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        double &d = out.data()[i];
        if (d <= 0) continue;
        if (sigma > 0) d += noise(rng);
        if (outlier_rate > 0 && unit(rng) < outlier_rate) d = uniform_depth(rng);
        d = std::clamp(d, d_min, d_max);
    }
    return out;
}

std::vector<Box2D> project_gt_boxes(const SceneSpec &scene, std::size_t camera_index, double min_pixels) {
    check_camera_index(scene, camera_index);
    const CameraSpec &cam = scene.cameras[camera_index];
    const double w_max = cam.intrinsics.width - 1, h_max = cam.intrinsics.height - 1;
    std::vector<Box2D> out;
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
        const SceneObject &obj = scene.objects[o];
        Eigen::AlignedBox2d hull;
        for (const auto &t : obj.surface_mesh) {
            for (const Eigen::Vector3d *v : {&t.a, &t.b, &t.c}) {
                if (auto p = project(*v, cam.intrinsics, cam.pose)) hull.extend(Eigen::Vector2d(p->u, p->v));
            }
        }
        if (hull.isEmpty()) continue;
        Box2D box;
        box.category = obj.category();
        box.object = static_cast<int>(o);
        box.u_min = std::clamp(hull.min().x(), 0.0, w_max);
        box.v_min = std::clamp(hull.min().y(), 0.0, h_max);
        box.u_max = std::clamp(hull.max().x(), 0.0, w_max);
        box.v_max = std::clamp(hull.max().y(), 0.0, h_max);
        if (box.u_max <= box.u_min || box.v_max <= box.v_min) continue;
        if (box.area() < min_pixels) continue;
        out.push_back(box);
    }
    return out;
}

CameraFrame render_frame(const SceneSpec &scene, std::size_t camera_index, double min_box_pixels) {
    RenderedImages img = render_images(scene, camera_index);
    CameraFrame frame;
    frame.intrinsics = scene.cameras[camera_index].intrinsics;
    frame.pose = scene.cameras[camera_index].pose;
    frame.depth = std::move(img.depth);
    frame.color = std::move(img.color);
    frame.boxes2d = project_gt_boxes(scene, camera_index, min_box_pixels);
    return frame;
}

std::vector<std::size_t> select_keyframes(std::span<const Posed> poses, std::span<const int> detections_per_frame,
                                          const KeyframeCriteria &criteria) {
    if (criteria.target_count < 1) throw std::invalid_argument("select_keyframes: target_count must be >= 1");
    if (poses.size() != detections_per_frame.size())
        throw std::invalid_argument("select_keyframes: poses/detections length mismatch");
    const double min_rot = criteria.min_rotation_deg * std::numbers::pi / 180.0;
    std::vector<bool> chosen(poses.size(), false);
    std::size_t count = 0;

    auto enough_motion = [&](std::size_t i) {
        for (std::size_t j = i; j-- > 0;) {
            if (!chosen[j]) continue;
            const double dt = (poses[i].translation - poses[j].translation).norm();
            return dt >= criteria.min_translation || relative_rotation_angle(poses[i], poses[j]) >= min_rot;
        }
        return true;
    };

    // Strict pass, then relax the detection requirement, then the motion one.
    constexpr bool passes[4][2] = {{true, true}, {false, true}, {true, false}, {false, false}};
    for (const auto &[need_detection, need_motion] : passes) {
        for (std::size_t i = 0; i < poses.size() && count < criteria.target_count; ++i) {
            if (chosen[i]) continue;
            if (need_detection && detections_per_frame[i] < 1) continue;
            if (need_motion && !enough_motion(i)) continue;
            chosen[i] = true;
            ++count;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < chosen.size(); ++i)
        if (chosen[i]) out.push_back(i);
    return out;
}

SceneSpec demo_scene() {
    SceneSpec scene;
    const OrientedBox boxes[] = {
        make_box({-0.6, -0.3, 0.35}, {0.6, 0.5, 0.7}, 0.0, 0),
        make_box({0.55, -0.45, 0.25}, {0.5, 0.5, 0.5}, 0.0, 1),
        make_box({0.1, 0.6, 0.4}, {0.9, 0.4, 0.8}, 0.0, 2),
    };
    for (std::size_t i = 0; i < std::size(boxes); ++i) scene.objects.push_back(make_object(boxes[i], i));
    OrbitTrajectory orbit;
    orbit.radius = 3.0;
    orbit.height = 1.5;
    orbit.steps = 20;
    orbit.look_at = {0.0, 0.0, 0.3};
    orbit.intrinsics = default_intrinsics();
    scene.cameras = orbit_cameras(orbit);
    scene.rng_seed = 7;
    return scene;
}

SceneSpec room_scene() {
    SceneSpec scene;
    const OrientedBox boxes[] = {
        make_box({1.2, 1.0, 0.40}, {1.2, 0.8, 0.8}, 0.3, 0),  make_box({6.8, 1.1, 0.45}, {0.6, 0.6, 0.9}, -0.2, 1),
        make_box({6.9, 6.8, 0.75}, {0.9, 0.5, 1.5}, 0.0, 2),  make_box({1.0, 6.9, 0.35}, {0.8, 0.8, 0.7}, 0.8, 3),
        make_box({4.0, 1.2, 0.30}, {1.6, 0.8, 0.6}, 0.0, 0),  make_box({1.1, 4.0, 0.50}, {0.5, 1.4, 1.0}, 1.2, 1),
        make_box({6.8, 4.0, 0.40}, {0.7, 1.1, 0.8}, -0.6, 2), make_box({4.0, 6.9, 0.60}, {1.4, 0.5, 1.2}, 0.0, 3),
    };
    for (std::size_t i = 0; i < std::size(boxes); ++i) scene.objects.push_back(make_object(boxes[i], i));
    OrbitTrajectory orbit;
    orbit.radius = 1.0;
    orbit.height = 1.4;
    orbit.steps = 60;
    orbit.look_at = {4.0, 4.0, 0.0};
    orbit.intrinsics = default_intrinsics();
    // Look outward toward the walls: start from an inward-looking orbit and flip the view target.
    for (auto &cam : orbit_cameras(orbit)) {
        const Eigen::Vector3d eye = cam.pose.translation;
        Eigen::Vector3d outward = eye - orbit.look_at;
        outward.z() = 0.0;
        const Eigen::Vector3d target = eye + 3.0 * outward.normalized() - Eigen::Vector3d(0, 0, 1.0);
        scene.cameras.push_back({orbit.intrinsics, look_at<double>(eye, target)});
    }
    scene.room_bounds = Eigen::AlignedBox3d(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(8, 8, 3));
    scene.rng_seed = 11;
    return scene;
}

}  // namespace psdet
