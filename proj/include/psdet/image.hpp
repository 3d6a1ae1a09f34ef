#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace psdet {

/// Depth in meters indexed (v, u); 0 marks an invalid pixel.
using DepthMap = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Interleaved H x W x C image.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int width, int height, int channels, double fill = 0.0)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {
        if (width <= 0 || height <= 0 || channels <= 0)
            throw std::invalid_argument("FeatureMap: dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    double &at(int u, int v, int c) { return data_[index(u, v, c)]; }
    double at(int u, int v, int c) const { return data_[index(u, v, c)]; }

    Eigen::Map<Eigen::VectorXd> texel(int u, int v) { return {&data_[index(u, v, 0)], channels_}; }
    Eigen::Map<const Eigen::VectorXd> texel(int u, int v) const { return {&data_[index(u, v, 0)], channels_}; }

    const std::vector<double> &data() const { return data_; }

private:
    std::size_t index(int u, int v, int c) const {
        return (static_cast<std::size_t>(v) * width_ + u) * channels_ + c;
    }

    int width_ = 0, height_ = 0, channels_ = 0;
    std::vector<double> data_;
};

/// Bilinear blend of the four texels around (u, v).
/// Precondition: 0 <= u <= W-1 and 0 <= v <= H-1.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bilinear_sample(const FeatureMap &map, Scalar u, Scalar v) {
    const int u0 = std::min(static_cast<int>(std::floor(u)), map.width() - 1);
    const int v0 = std::min(static_cast<int>(std::floor(v)), map.height() - 1);
    const int u1 = std::min(u0 + 1, map.width() - 1);
    const int v1 = std::min(v0 + 1, map.height() - 1);
    const Scalar fu = u - Scalar(u0), fv = v - Scalar(v0);
    return ((Scalar(1) - fu) * (Scalar(1) - fv) * map.texel(u0, v0).template cast<Scalar>() +
            fu * (Scalar(1) - fv) * map.texel(u1, v0).template cast<Scalar>() +
            (Scalar(1) - fu) * fv * map.texel(u0, v1).template cast<Scalar>() +
            fu * fv * map.texel(u1, v1).template cast<Scalar>());
}

}  // namespace psdet
