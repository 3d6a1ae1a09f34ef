#pragma once

// Sparse voxelization of scattered points and the dense grid-sampling
// baseline, with cell and memory accounting.

#include "psdet/scatter.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <iterator>
#include <string>
#include <unordered_map>
#include <vector>

namespace psdet {

enum class Pooling { Mean, Max };

struct VoxelCell {
    Eigen::Vector3i index;
    std::size_t point_count = 0;
    Eigen::VectorXd feature;  // pooled features
    double score = 0.0;       // pooled surface score
};

class SparseVoxelGrid {
public:
    SparseVoxelGrid(double voxel_size, Eigen::Vector3d origin);

    double voxel_size() const { return voxel_size_; }
    const Eigen::Vector3d &origin() const { return origin_; }
    std::size_t occupied() const { return cells_.size(); }

    Eigen::Vector3i index_of(const Eigen::Vector3d &p) const;
    Eigen::Vector3d cell_center(const Eigen::Vector3i &idx) const;
    const VoxelCell *find(const Eigen::Vector3i &idx) const;

    /// Cells sorted by (x, y, z) index.
    std::vector<const VoxelCell *> sorted_cells() const;

    friend SparseVoxelGrid voxelize(const ScatterCloud &, double, const Eigen::Vector3d &, Pooling);

private:
    double voxel_size_;
    Eigen::Vector3d origin_;
    std::unordered_map<std::uint64_t, VoxelCell> cells_;
};

/// Per-cell pooling of features and scores; empty feature/score columns pool to empty/zero.
SparseVoxelGrid voxelize(const ScatterCloud &cloud, double voxel_size, const Eigen::Vector3d &origin,
                         Pooling pooling = Pooling::Mean);

/// Regular grid over an axis-aligned box; per-axis count is ceil(extent / voxel_size).
class DenseGridSpec {
public:
    DenseGridSpec(Eigen::AlignedBox3d bounds, double voxel_size);

    const Eigen::AlignedBox3d &bounds() const { return bounds_; }
    double voxel_size() const { return voxel_size_; }
    const Eigen::Matrix<std::int64_t, 3, 1> &dims() const { return dims_; }
    std::int64_t cell_count() const { return dims_.prod(); }
    Eigen::Vector3d cell_center(std::int64_t linear) const;

    /// Lazy forward range over cell centers; nothing is materialized.
    class Iterator {
    public:
        using iterator_category = std::forward_iterator_tag;
        using value_type = Eigen::Vector3d;
        using difference_type = std::ptrdiff_t;
        using pointer = void;
        using reference = Eigen::Vector3d;

        Iterator() = default;
        Iterator(const DenseGridSpec *spec, std::int64_t i) : spec_(spec), i_(i) {}
        Eigen::Vector3d operator*() const { return spec_->cell_center(i_); }
        Iterator &operator++() {
            ++i_;
            return *this;
        }
        Iterator operator++(int) {
            Iterator t = *this;
            ++i_;
            return t;
        }
        bool operator==(const Iterator &o) const { return i_ == o.i_; }

    private:
        const DenseGridSpec *spec_ = nullptr;
        std::int64_t i_ = 0;
    };

    Iterator begin() const { return {this, 0}; }
    Iterator end() const { return {this, cell_count()}; }

private:
    Eigen::AlignedBox3d bounds_;
    double voxel_size_;
    Eigen::Matrix<std::int64_t, 3, 1> dims_;
};

inline const DenseGridSpec &dense_grid_points(const DenseGridSpec &spec) { return spec; }

/// Declared per-record sizes used for the memory figures.
struct RecordLayout {
    static constexpr std::size_t kPositionBytes = 12;     // 3 x float32
    static constexpr std::size_t kFeatureBytesPerChannel = 4;
    static constexpr std::size_t kBookkeepingBytes = 8;  // frame id (int32) + score (float32)

    static std::size_t bytes(int feature_channels) {
        return kPositionBytes + kFeatureBytesPerChannel * static_cast<std::size_t>(feature_channels) +
               kBookkeepingBytes;
    }
};

struct SparsityReport {
    std::size_t scatter_points = 0;
    std::size_t occupied_voxels = 0;
    std::int64_t dense_cells = 0;
    double reduction_factor = 0.0;
    std::size_t record_bytes = 0;
    std::uint64_t bytes_scatter = 0;
    std::uint64_t bytes_dense = 0;
    double voxel_size = 0.0;
    int feature_channels = 0;
};

/// Compares the scattered cloud against the dense grid; occupied voxels are
/// counted at the dense grid's resolution and origin.
SparsityReport sparsity_report(const ScatterCloud &cloud, const DenseGridSpec &dense);

}  // namespace psdet
