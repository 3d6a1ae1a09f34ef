#include "psdet/voxelgrid.hpp"

#include "psdet/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psdet {

SparseVoxelGrid::SparseVoxelGrid(double voxel_size, Eigen::Vector3d origin)
    : voxel_size_(voxel_size), origin_(std::move(origin)) {
    if (!(voxel_size > 0)) throw std::invalid_argument("voxel size must be positive");
}

Eigen::Vector3i SparseVoxelGrid::index_of(const Eigen::Vector3d &p) const {
    return cell_index(p, origin_, voxel_size_);
}

Eigen::Vector3d SparseVoxelGrid::cell_center(const Eigen::Vector3i &idx) const {
    return origin_ + (idx.cast<double>().array() + 0.5).matrix() * voxel_size_;
}

const VoxelCell *SparseVoxelGrid::find(const Eigen::Vector3i &idx) const {
    const auto it = cells_.find(pack_cell(idx));
    return it == cells_.end() ? nullptr : &it->second;
}

std::vector<const VoxelCell *> SparseVoxelGrid::sorted_cells() const {
    std::vector<const VoxelCell *> out;
    out.reserve(cells_.size());
    for (const auto &[key, cell] : cells_) out.push_back(&cell);
    std::sort(out.begin(), out.end(), [](const VoxelCell *a, const VoxelCell *b) {
        return std::lexicographical_compare(a->index.data(), a->index.data() + 3, b->index.data(),
                                            b->index.data() + 3);
    });
    return out;
}

SparseVoxelGrid voxelize(const ScatterCloud &cloud, double voxel_size, const Eigen::Vector3d &origin,
                         Pooling pooling) {
    SparseVoxelGrid grid(voxel_size, origin);
    const bool has_features = cloud.features.rows() == static_cast<Eigen::Index>(cloud.size());
    const bool has_scores = cloud.scores.size() == static_cast<Eigen::Index>(cloud.size());
    const Eigen::Index width = has_features ? cloud.features.cols() : 0;

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Eigen::Vector3i idx = grid.index_of(cloud.points[i].position);
        if ((idx.array().abs() > kMaxCellIndex).any())
            throw std::out_of_range("voxelize: point outside the 21-bit index range");
        const auto r = static_cast<Eigen::Index>(i);
        auto [it, inserted] = grid.cells_.try_emplace(pack_cell(idx));
        VoxelCell &cell = it->second;
        const double score = has_scores ? cloud.scores(r) : 0.0;
        if (inserted) {
            cell.index = idx;
            cell.feature = has_features ? Eigen::VectorXd(cloud.features.row(r).transpose())
                                        : Eigen::VectorXd::Zero(width);
            cell.score = score;
        } else if (pooling == Pooling::Mean) {
            if (has_features) cell.feature += cloud.features.row(r).transpose();
            cell.score += score;
        } else {
            if (has_features) cell.feature = cell.feature.cwiseMax(cloud.features.row(r).transpose());
            cell.score = std::max(cell.score, score);
        }
        ++cell.point_count;
    }
    if (pooling == Pooling::Mean) {
        for (auto &[key, cell] : grid.cells_) {
            cell.feature /= static_cast<double>(cell.point_count);
            cell.score /= static_cast<double>(cell.point_count);
        }
    }
    return grid;
}

namespace {

std::int64_t axis_cells(double extent, double voxel) {
    // Tolerate representation error so that e.g. 6.4 / 0.16 gives 40 cells, not 41.
    const double ratio = extent / voxel;
    const double snapped = std::round(ratio);
    const double n = std::abs(ratio - snapped) <= 1e-9 * std::max(1.0, snapped) ? snapped : std::ceil(ratio);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(n));
}

}  // namespace

DenseGridSpec::DenseGridSpec(Eigen::AlignedBox3d bounds, double voxel_size)
    : bounds_(std::move(bounds)), voxel_size_(voxel_size) {
    if (!(voxel_size > 0)) throw std::invalid_argument("dense grid: voxel size must be positive");
    if (bounds_.isEmpty()) throw std::invalid_argument("dense grid: empty bounds");
    const Eigen::Vector3d extent = bounds_.sizes();
    for (int a = 0; a < 3; ++a) dims_(a) = axis_cells(extent(a), voxel_size);
}

Eigen::Vector3d DenseGridSpec::cell_center(std::int64_t linear) const {
    const std::int64_t x = linear / (dims_.y() * dims_.z());
    const std::int64_t rem = linear % (dims_.y() * dims_.z());
    const std::int64_t y = rem / dims_.z();
    const std::int64_t z = rem % dims_.z();
    return bounds_.min() +
           (Eigen::Vector3d(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)).array() + 0.5)
                   .matrix() *
               voxel_size_;
}

SparsityReport sparsity_report(const ScatterCloud &cloud, const DenseGridSpec &dense) {
    SparsityReport r;
    r.scatter_points = cloud.size();
    r.voxel_size = dense.voxel_size();
    r.occupied_voxels = cloud.empty() ? 0 : voxelize(cloud, dense.voxel_size(), dense.bounds().min()).occupied();
    r.dense_cells = dense.cell_count();
    r.reduction_factor = static_cast<double>(r.dense_cells) / static_cast<double>(std::max<std::size_t>(1, r.scatter_points));
    r.feature_channels = cloud.layout.width();
    r.record_bytes = RecordLayout::bytes(r.feature_channels);
    r.bytes_scatter = static_cast<std::uint64_t>(r.scatter_points) * r.record_bytes;
    r.bytes_dense = static_cast<std::uint64_t>(r.dense_cells) * r.record_bytes;
    return r;
}

}  // namespace psdet
