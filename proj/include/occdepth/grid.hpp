#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace occdepth {

/// Dense H x W x C array of doubles, row-major with channels last.
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const { return data_.empty(); }

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  double& operator()(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double operator()(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  bool same_spatial(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  std::string shape_string() const;

  void fill(double value);

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// H x W x C intensities in [0, 1].
using Image = Grid;
/// H x W x 1 strictly positive depths in millimeters.
using DepthMap = Grid;
/// H x W x K per-pixel class probabilities.
using SegmentationMap = Grid;

/// H x W binary mask.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, bool value = false);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  bool operator()(int y, int x) const { return bits_[index(y, x)] != 0; }
  void set(int y, int x, bool value) { bits_[index(y, x)] = value ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }

  /// Number of set pixels (the mask's L1 norm).
  std::size_t count() const;

  bool same_spatial(const Grid& grid) const {
    return height_ == grid.height() && width_ == grid.width();
  }
  bool same_shape(const Mask& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

Mask mask_and(const Mask& a, const Mask& b);
Mask mask_not(const Mask& a);

/// Mean over channels, producing an H x W x 1 grid.
Grid channel_mean(const Grid& grid);

/// Throws ShapeError with `what` context when shapes disagree.
void require_same_shape(const Grid& a, const Grid& b, const char* what);
void require_same_spatial(const Grid& a, const Grid& b, const char* what);
void require_same_spatial(const Grid& a, const Mask& b, const char* what);

}  // namespace occdepth
