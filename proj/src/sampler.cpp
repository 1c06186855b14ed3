#include "occdepth/sampler.hpp"

#include <cmath>

#include "occdepth/errors.hpp"

namespace occdepth {
namespace {

struct Cell {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  double ax = 0.0;  // weight of x1
  double ay = 0.0;  // weight of y1
  bool valid = false;
};

// Cell of the lower-left neighbor. A coordinate sitting exactly on the last
// row/column uses the previous cell with weight 1 on the far node.
int lower_node(double t, int extent) {
  int i = static_cast<int>(std::floor(t));
  if (i >= extent - 1) i = extent > 1 ? extent - 2 : 0;
  return i;
}

Cell locate(double u, double v, int width, int height) {
  Cell cell;
  if (!(u >= 0.0 && u <= width - 1 && v >= 0.0 && v <= height - 1)) return cell;
  cell.x0 = lower_node(u, width);
  cell.y0 = lower_node(v, height);
  cell.x1 = width > 1 ? cell.x0 + 1 : cell.x0;
  cell.y1 = height > 1 ? cell.y0 + 1 : cell.y0;
  cell.ax = u - cell.x0;
  cell.ay = v - cell.y0;
  cell.valid = true;
  return cell;
}

void require_coords(const Grid& grid, const Grid& coords) {
  if (grid.empty()) throw ShapeError("sample_bilinear: empty grid");
  if (coords.channels() != 2) {
    throw ShapeError("sample_bilinear: coords must have 2 channels, got " +
                     coords.shape_string());
  }
}

}  // namespace

SampledGrid sample_bilinear(const Grid& grid, const Grid& coords) {
  require_coords(grid, coords);
  const int channels = grid.channels();
  SampledGrid out{Grid(coords.height(), coords.width(), channels),
                  Mask(coords.height(), coords.width())};
  for (int y = 0; y < coords.height(); ++y) {
    for (int x = 0; x < coords.width(); ++x) {
      const Cell cell = locate(coords(y, x, 0), coords(y, x, 1), grid.width(), grid.height());
      if (!cell.valid) continue;
      out.valid.set(y, x, true);
      const double w00 = (1.0 - cell.ax) * (1.0 - cell.ay);
      const double w10 = cell.ax * (1.0 - cell.ay);
      const double w01 = (1.0 - cell.ax) * cell.ay;
      const double w11 = cell.ax * cell.ay;
      for (int c = 0; c < channels; ++c) {
        out.values(y, x, c) = w00 * grid(cell.y0, cell.x0, c) + w10 * grid(cell.y0, cell.x1, c) +
                              w01 * grid(cell.y1, cell.x0, c) + w11 * grid(cell.y1, cell.x1, c);
      }
    }
  }
  return out;
}

BilinearGradients sample_bilinear_grad(const Grid& grid, const Grid& coords,
                                       const Grid& upstream) {
  require_coords(grid, coords);
  if (upstream.height() != coords.height() || upstream.width() != coords.width() ||
      upstream.channels() != grid.channels()) {
    throw ShapeError("sample_bilinear_grad: upstream " + upstream.shape_string() +
                     " inconsistent with coords " + coords.shape_string() + " and grid " +
                     grid.shape_string());
  }
  const int channels = grid.channels();
  BilinearGradients out{Grid(grid.height(), grid.width(), channels),
                        Grid(coords.height(), coords.width(), 2)};
  for (int y = 0; y < coords.height(); ++y) {
    for (int x = 0; x < coords.width(); ++x) {
      const Cell cell = locate(coords(y, x, 0), coords(y, x, 1), grid.width(), grid.height());
      if (!cell.valid) continue;
      const double w00 = (1.0 - cell.ax) * (1.0 - cell.ay);
      const double w10 = cell.ax * (1.0 - cell.ay);
      const double w01 = (1.0 - cell.ax) * cell.ay;
      const double w11 = cell.ax * cell.ay;
      double du = 0.0;
      double dv = 0.0;
      for (int c = 0; c < channels; ++c) {
        const double g = upstream(y, x, c);
        if (g == 0.0) continue;
        const double v00 = grid(cell.y0, cell.x0, c);
        const double v10 = grid(cell.y0, cell.x1, c);
        const double v01 = grid(cell.y1, cell.x0, c);
        const double v11 = grid(cell.y1, cell.x1, c);
        out.grid(cell.y0, cell.x0, c) += w00 * g;
        out.grid(cell.y0, cell.x1, c) += w10 * g;
        out.grid(cell.y1, cell.x0, c) += w01 * g;
        out.grid(cell.y1, cell.x1, c) += w11 * g;
        du += g * ((1.0 - cell.ay) * (v10 - v00) + cell.ay * (v11 - v01));
        dv += g * ((1.0 - cell.ax) * (v01 - v00) + cell.ax * (v11 - v10));
      }
      // Degenerate single-row/column grids have no slope along that axis.
      out.coords(y, x, 0) = cell.x1 != cell.x0 ? du : 0.0;
      out.coords(y, x, 1) = cell.y1 != cell.y0 ? dv : 0.0;
    }
  }
  return out;
}

SampledGrid synthesize_view(const Image& source, const WarpField& warp) {
  SampledGrid out = sample_bilinear(source, warp.coords);
  if (!warp.valid.same_shape(out.valid)) {
    throw ShapeError("synthesize_view: warp validity mask does not match coords");
  }
  const int channels = out.values.channels();
  for (int y = 0; y < out.values.height(); ++y) {
    for (int x = 0; x < out.values.width(); ++x) {
      if (out.valid(y, x) && warp.valid(y, x)) continue;
      out.valid.set(y, x, false);
      for (int c = 0; c < channels; ++c) out.values(y, x, c) = 0.0;
    }
  }
  return out;
}

}  // namespace occdepth
