#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace fassmvs {

// Row-major 2-D grid. Holds 8-bit images, float maps and per-pixel vectors.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }
    template <typename U>
    bool same_size(const Raster<U>& o) const {
        return width_ == o.width() && height_ == o.height();
    }

    T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const T& at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    // Edge-clamped access
    const T& at_clamped(int x, int y) const {
        return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
    const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool operator==(const Raster& o) const {
        return width_ == o.width_ && height_ == o.height_ && data_ == o.data_;
    }

private:
    int width_ = 0, height_ = 0;
    std::vector<T> data_;
};

using ImageU8 = Raster<std::uint8_t>;
using RgbImage = Raster<std::array<std::uint8_t, 3>>;

// Per-pixel maps; 0 (resp. the zero vector) is the invalid sentinel.
using DepthMap = Raster<float>;
using ConfidenceMap = Raster<float>;
using NormalMap = Raster<Eigen::Vector3f>;

inline bool depth_valid(float d) { return d > 0.0f && std::isfinite(d); }
inline bool normal_valid(const Eigen::Vector3f& n) { return n.squaredNorm() > 0.0f; }

inline NormalMap make_normal_map(int w, int h) {
    return NormalMap(w, h, Eigen::Vector3f::Zero());
}

// Bilinear sample with edge clamp; coordinates in pixel units.
template <typename T>
double bilinear(const Raster<T>& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ax = x - x0, ay = y - y0;
    const double top = (1.0 - ax) * img.at(x0, y0) + ax * img.at(x1, y0);
    const double bot = (1.0 - ax) * img.at(x0, y1) + ax * img.at(x1, y1);
    return (1.0 - ay) * top + ay * bot;
}

}  // namespace fassmvs
