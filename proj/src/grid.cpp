#include "occdepth/grid.hpp"

#include <algorithm>

#include "occdepth/errors.hpp"

namespace occdepth {

Grid::Grid(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0) {
    throw ShapeError("negative grid dimension");
  }
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                   static_cast<std::size_t>(channels),
               fill);
}

std::string Grid::shape_string() const {
  return std::to_string(height_) + "x" + std::to_string(width_) + "x" +
         std::to_string(channels_);
}

void Grid::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Mask::Mask(int height, int width, bool value) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw ShapeError("negative mask dimension");
  bits_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width),
               value ? 1 : 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Mask mask_and(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw ShapeError("mask_and: shape mismatch");
  Mask out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a[i] && b[i]);
  return out;
}

Mask mask_not(const Mask& a) {
  Mask out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, !a[i]);
  return out;
}

Grid channel_mean(const Grid& grid) {
  Grid out(grid.height(), grid.width(), 1);
  const int channels = grid.channels();
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      double sum = 0.0;
      for (int c = 0; c < channels; ++c) sum += grid(y, x, c);
      out(y, x) = channels > 0 ? sum / channels : 0.0;
    }
  }
  return out;
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void require_same_spatial(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_spatial(b)) {
    throw ShapeError(std::string(what) + ": spatial size " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

void require_same_spatial(const Grid& a, const Mask& b, const char* what) {
  if (!b.same_spatial(a)) {
    throw ShapeError(std::string(what) + ": grid " + a.shape_string() + " vs mask " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

}  // namespace occdepth
