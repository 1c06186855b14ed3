#pragma once

#include "occdepth/geometry.hpp"
#include "occdepth/grid.hpp"

namespace occdepth {

/// Bilinear samples. valid(p) is set iff all four interpolation neighbors
/// are inside the source grid; invalid pixels hold zero in every channel.
struct SampledGrid {
  Grid values;
  Mask valid;
};

/// Samples `grid` (H x W x C) at `coords` (H' x W' x 2, (u, v) in pixels).
/// Out-of-bounds locations are zero-filled and flagged invalid; there is no
/// clamping or reflection at the border.
SampledGrid sample_bilinear(const Grid& grid, const Grid& coords);

struct BilinearGradients {
  Grid grid;    // same shape as the sampled grid
  Grid coords;  // H' x W' x 2
};

/// Adjoint of sample_bilinear for an upstream gradient of shape H' x W' x C.
/// On lattice lines the derivative is taken from the cell whose lower corner
/// is floor(u) (the right derivative); at the far border, from the last cell.
BilinearGradients sample_bilinear_grad(const Grid& grid, const Grid& coords,
                                       const Grid& upstream);

/// Reconstructs the target view by sampling `source` at the warp coordinates.
/// Validity is the sampler's validity intersected with warp.valid.
SampledGrid synthesize_view(const Image& source, const WarpField& warp);

}  // namespace occdepth
