#include "psdet/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace psdet {

namespace {

Eigen::Vector3d vec3(const json &j, const char *what) {
    if (!j.is_array() || j.size() != 3) throw FormatError(std::string(what) + ": expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Eigen::Vector3d &v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
T field(const json &j, const char *key) {
    if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw FormatError(std::string("field '") + key + "': " + e.what());
    }
}

template <typename T>
T field_or(const json &j, const char *key, T fallback) {
    return j.contains(key) ? field<T>(j, key) : fallback;
}

Intrinsicsd intrinsics_from_json(const json &j) {
    Intrinsicsd K;
    K.fx = field<double>(j, "fx");
    K.fy = field<double>(j, "fy");
    K.cx = field<double>(j, "cx");
    K.cy = field<double>(j, "cy");
    K.width = field<int>(j, "width");
    K.height = field<int>(j, "height");
    return K;
}

json intrinsics_to_json(const Intrinsicsd &K) {
    return {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

std::ofstream open_out(const std::filesystem::path &path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, mode);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << text;
}

void write_json(const std::filesystem::path &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

json box_to_json(const OrientedBox &box) {
    return {{"center", to_json(box.center)},
            {"size", to_json(box.size)},
            {"yaw", box.yaw},
            {"category", box.category},
            {"score", box.score}};
}

OrientedBox box_from_json(const json &j) {
    if (!j.is_object()) throw FormatError("box: expected an object");
    try {
        return make_box(vec3(field<json>(j, "center"), "center"), vec3(field<json>(j, "size"), "size"),
                        field_or<double>(j, "yaw", 0.0), field_or<int>(j, "category", 0),
                        field_or<double>(j, "score", 1.0));
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
}

SceneSpec scene_from_json(const json &j) {
    if (!j.is_object()) throw FormatError("scene: expected an object");
    SceneSpec scene;
    const json objects = field<json>(j, "objects");
    if (!objects.is_array()) throw FormatError("scene: 'objects' must be an array");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        SceneObject obj = make_object(box_from_json(objects[i]), i);
        if (objects[i].contains("albedo")) obj.albedo = vec3(objects[i]["albedo"], "albedo");
        scene.objects.push_back(std::move(obj));
    }

    if (j.contains("cameras")) {
        for (const auto &c : j.at("cameras")) {
            CameraSpec cam;
            cam.intrinsics = intrinsics_from_json(c);
            const auto rot = field<std::vector<double>>(c, "rotation");
            if (rot.size() != 9) throw FormatError("camera: rotation must have 9 entries (row-major)");
            for (int r = 0; r < 3; ++r)
                for (int k = 0; k < 3; ++k) cam.pose.rotation(r, k) = rot[static_cast<std::size_t>(3 * r + k)];
            cam.pose.translation = vec3(field<json>(c, "translation"), "translation");
            scene.cameras.push_back(cam);
        }
    } else if (j.contains("trajectory")) {
        const json &t = j.at("trajectory");
        const auto type = field<std::string>(t, "type");
        if (type != "orbit") throw FormatError("trajectory: unsupported type '" + type + "'");
        OrbitTrajectory orbit;
        orbit.radius = field<double>(t, "radius");
        orbit.height = field<double>(t, "height");
        orbit.steps = field<int>(t, "steps");
        orbit.look_at = t.contains("look_at") ? vec3(t["look_at"], "look_at") : Eigen::Vector3d::Zero();
        orbit.intrinsics = t.contains("intrinsics") ? intrinsics_from_json(t["intrinsics"]) : default_intrinsics();
        try {
            scene.cameras = orbit_cameras(orbit);
        } catch (const std::invalid_argument &e) {
            throw FormatError(e.what());
        }
    } else {
        throw FormatError("scene: needs 'cameras' or 'trajectory'");
    }

    scene.rng_seed = field_or<std::uint64_t>(j, "rng_seed", 0);
    scene.depth_noise_sigma = field_or<double>(j, "depth_noise_sigma", 0.0);
    scene.outlier_rate = field_or<double>(j, "outlier_rate", 0.0);
    if (j.contains("room_bounds")) {
        const json &b = j.at("room_bounds");
        scene.room_bounds = Eigen::AlignedBox3d(vec3(field<json>(b, "min"), "min"), vec3(field<json>(b, "max"), "max"));
    }
    try {
        scene.validate();
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
    return scene;
}

json scene_to_json(const SceneSpec &scene) {
    json objects = json::array();
    for (const auto &o : scene.objects) {
        json b = box_to_json(o.box);
        b.erase("score");
        b["albedo"] = to_json(o.albedo);
        objects.push_back(b);
    }
    json cameras = json::array();
    for (const auto &c : scene.cameras) {
        json cj = intrinsics_to_json(c.intrinsics);
        std::vector<double> rot;
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) rot.push_back(c.pose.rotation(r, k));
        cj["rotation"] = rot;
        cj["translation"] = to_json(c.pose.translation);
        cameras.push_back(cj);
    }
    json j = {{"objects", objects},
              {"cameras", cameras},
              {"rng_seed", scene.rng_seed},
              {"depth_noise_sigma", scene.depth_noise_sigma},
              {"outlier_rate", scene.outlier_rate}};
    if (scene.room_bounds)
        j["room_bounds"] = {{"min", to_json(scene.room_bounds->min())}, {"max", to_json(scene.room_bounds->max())}};
    return j;
}

std::vector<OrientedBox> detections_from_json(const json &j) {
    const json &list = j.is_object() && j.contains("detections") ? j.at("detections") : j;
    if (!list.is_array()) throw FormatError("detections: expected a list of boxes");
    std::vector<OrientedBox> out;
    for (const auto &b : list) out.push_back(box_from_json(b));
    return out;
}

json detections_to_json(const std::vector<OrientedBox> &boxes) {
    json out = json::array();
    for (const auto &b : boxes) out.push_back(box_to_json(b));
    return out;
}

json sparsity_to_json(const SparsityReport &r) {
    return {{"scatter_points", r.scatter_points},
            {"occupied_voxels", r.occupied_voxels},
            {"dense_cells", static_cast<std::uint64_t>(r.dense_cells)},
            {"reduction_factor", r.reduction_factor},
            {"bytes_scatter", r.bytes_scatter},
            {"bytes_dense", r.bytes_dense},
            {"voxel_size", r.voxel_size},
            {"record_layout",
             {{"position_bytes", RecordLayout::kPositionBytes},
              {"feature_bytes_per_channel", RecordLayout::kFeatureBytesPerChannel},
              {"bookkeeping_bytes", RecordLayout::kBookkeepingBytes},
              {"feature_channels", r.feature_channels},
              {"record_bytes", r.record_bytes}}}};
}

void validate_sparsity_json(const json &j) {
    if (!j.is_object()) throw FormatError("sparsity report: expected an object");
    for (const char *key : {"scatter_points", "occupied_voxels", "dense_cells", "bytes_scatter", "bytes_dense"}) {
        if (!j.contains(key) || !j.at(key).is_number_unsigned())
            throw FormatError(std::string("sparsity report: '") + key + "' must be a non-negative integer");
    }
    for (const char *key : {"reduction_factor", "voxel_size"})
        if (!j.contains(key) || !j.at(key).is_number()) throw FormatError(std::string("sparsity report: '") + key + "' must be a number");
    if (!j.contains("record_layout") || !j.at("record_layout").is_object())
        throw FormatError("sparsity report: missing record_layout");
    const auto points = j.at("scatter_points").get<std::uint64_t>();
    const auto cells = j.at("dense_cells").get<std::uint64_t>();
    const double expected = static_cast<double>(cells) / static_cast<double>(std::max<std::uint64_t>(1, points));
    if (std::abs(j.at("reduction_factor").get<double>() - expected) > 1e-9 * std::max(1.0, expected))
        throw FormatError("sparsity report: reduction_factor inconsistent with counts");
    if (j.at("occupied_voxels").get<std::uint64_t>() > points)
        throw FormatError("sparsity report: more occupied voxels than points");
}

namespace {

std::string threshold_label(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

}  // namespace

json detection_report_to_json(const DetectionReport &report) {
    json per = json::object();
    for (const auto &[c, m] : report.per_category) {
        json e = {{"gt_count", m.gt_count}, {"det_count", m.det_count}};
        for (const auto &[t, v] : m.ap) e["AP@" + threshold_label(t)] = v;
        for (const auto &[t, v] : m.recall) e["R@" + threshold_label(t)] = v;
        per[std::to_string(c)] = e;
    }
    json mean = json::object();
    for (const auto &[t, v] : report.mean_ap) mean["mAP@" + threshold_label(t)] = v;
    for (const auto &[t, v] : report.mean_recall) mean["mR@" + threshold_label(t)] = v;
    return {{"per_category", per}, {"mean", mean}};
}

void write_cloud_ply(const std::filesystem::path &path, const ScatterCloud &cloud, bool with_features) {
    auto out = open_out(path);
    const bool has_scores = cloud.scores.size() == static_cast<Eigen::Index>(cloud.size());
    const bool features = with_features && cloud.features.rows() == static_cast<Eigen::Index>(cloud.size());
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "property int frame\nproperty double u\nproperty double v\nproperty int category\n"
        << "property double score\n";
    if (!has_scores) out << "comment scores absent\n";
    if (features)
        for (Eigen::Index c = 0; c < cloud.features.cols(); ++c) out << "property double f" << c << "\n";
    out << "end_header\n";
    out.precision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const ScatterPoint &p = cloud.points[i];
        const auto r = static_cast<Eigen::Index>(i);
        out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' ' << p.source_frame << ' '
            << p.source_pixel.x() << ' ' << p.source_pixel.y() << ' ' << p.source_box_category << ' '
            << (has_scores ? cloud.scores(r) : 0.0);
        if (features)
            for (Eigen::Index c = 0; c < cloud.features.cols(); ++c) out << ' ' << cloud.features(r, c);
        out << '\n';
    }
}

ScatterCloud read_cloud_ply(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "ply") throw FormatError(path.string() + ": not a PLY file");
    std::size_t count = 0;
    std::vector<std::string> properties;
    bool scores_absent = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") throw FormatError(path.string() + ": only ASCII PLY is supported");
        } else if (tok == "element") {
            std::string name;
            ls >> name >> count;
            if (name != "vertex") throw FormatError(path.string() + ": unexpected element '" + name + "'");
        } else if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            properties.push_back(name);
        } else if (tok == "comment") {
            if (line.find("scores absent") != std::string::npos) scores_absent = true;
        } else if (tok == "end_header") {
            break;
        }
    }
    const std::vector<std::string> base = {"x", "y", "z", "frame", "u", "v", "category", "score"};
    if (properties.size() < base.size() || !std::equal(base.begin(), base.end(), properties.begin()))
        throw FormatError(path.string() + ": unexpected vertex properties");
    const auto feature_cols = static_cast<Eigen::Index>(properties.size() - base.size());

    ScatterCloud cloud;
    cloud.points.resize(count);
    cloud.scores.resize(static_cast<Eigen::Index>(count));
    if (feature_cols > 0) cloud.features.resize(static_cast<Eigen::Index>(count), feature_cols);
    for (std::size_t i = 0; i < count; ++i) {
        ScatterPoint &p = cloud.points[i];
        const auto r = static_cast<Eigen::Index>(i);
        double score = 0.0;
        in >> p.position.x() >> p.position.y() >> p.position.z() >> p.source_frame >> p.source_pixel.x() >>
            p.source_pixel.y() >> p.source_box_category >> score;
        cloud.scores(r) = score;
        for (Eigen::Index c = 0; c < feature_cols; ++c) in >> cloud.features(r, c);
        if (!in) throw FormatError(path.string() + ": truncated vertex data");
    }
    if (scores_absent) cloud.scores.resize(0);
    return cloud;
}

void write_points_ply(const std::filesystem::path &path, const std::vector<Eigen::Vector3d> &points) {
    auto out = open_out(path);
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\nend_header\n";
    out.precision(17);
    for (const auto &p : points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

void write_voxels_ply(const std::filesystem::path &path, const SparseVoxelGrid &grid) {
    const auto cells = grid.sorted_cells();
    auto out = open_out(path);
    out << "ply\nformat ascii 1.0\nelement vertex " << cells.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\nproperty int count\n"
        << "property double score\nend_header\n";
    out.precision(17);
    for (const VoxelCell *c : cells) {
        const Eigen::Vector3d p = grid.cell_center(c->index);
        out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << c->point_count << ' ' << c->score << '\n';
    }
}

void write_depth_pgm(const std::filesystem::path &path, const DepthMap &depth) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << "P5\n" << depth.cols() << ' ' << depth.rows() << "\n65535\n";
    for (Eigen::Index v = 0; v < depth.rows(); ++v) {
        for (Eigen::Index u = 0; u < depth.cols(); ++u) {
            const double mm = std::clamp(std::round(depth(v, u) * 1000.0), 0.0, 65535.0);
            const auto val = static_cast<std::uint16_t>(mm);
            const char bytes[2] = {static_cast<char>(val >> 8), static_cast<char>(val & 0xff)};
            out.write(bytes, 2);
        }
    }
}

void write_color_ppm(const std::filesystem::path &path, const FeatureMap &color) {
    if (color.channels() < 3) throw std::invalid_argument("write_color_ppm: need three channels");
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << "P6\n" << color.width() << ' ' << color.height() << "\n255\n";
    for (int v = 0; v < color.height(); ++v)
        for (int u = 0; u < color.width(); ++u)
            for (int c = 0; c < 3; ++c)
                out.put(static_cast<char>(std::clamp(std::round(color.at(u, v, c) * 255.0), 0.0, 255.0)));
}

}  // namespace psdet
