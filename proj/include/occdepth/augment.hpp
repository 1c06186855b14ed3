#pragma once

#include <cstdint>

#include "occdepth/geometry.hpp"
#include "occdepth/grid.hpp"

namespace occdepth {

struct Rect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool contains(int y, int x) const {
    return y >= top && y < top + height && x >= left && x < left + width;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// One occluding rectangle whose sides are a quarter of the frame's sides.
struct OcclusionMask {
  Mask occluded;  // 1 exactly on rect
  Rect rect;
  std::uint64_t seed = 0;
};

/// floor(H/4) x floor(W/4) rectangle at a seeded uniform in-bounds position.
/// Throws DomainError when H or W is below 4.
OcclusionMask make_occlusion_mask(int height, int width, std::uint64_t seed);

/// Mask for an explicit rectangle, which must lie inside the frame.
OcclusionMask occlusion_mask_at(int height, int width, const Rect& rect);

/// Copy of `image` with every channel inside the rectangle set to `fill`.
Image apply_mask(const Image& image, const OcclusionMask& mask, double fill = 0.0);

/// Mean over all pixels and channels, for mean-fill masking.
double mean_intensity(const Image& image);

/// Warped source depth expressed in the target frame. Treated as a constant
/// (stop-gradient) pseudo-label by every consumer.
struct DepthPseudoLabel {
  DepthMap depth;
  Mask valid;
};

/// Warps with the target-frame depth estimate, samples the source depth
/// prediction at the warped coordinates, lifts each sample to a 3D point in
/// the source frame and returns its depth in the target frame.
DepthPseudoLabel augmented_depth_target(const DepthMap& depth_target_estimate,
                                        const DepthMap& depth_source_pred,
                                        const CameraIntrinsics& intrinsics,
                                        const PoseSE3& target_to_source);

/// Supervision support for the masked depth loss: not occluded and valid.
Mask supervision_mask(const OcclusionMask& mask, const Mask& valid);

}  // namespace occdepth
