#include "occdepth/augment.hpp"

#include <random>
#include <string>

#include "occdepth/errors.hpp"
#include "occdepth/sampler.hpp"

namespace occdepth {

OcclusionMask make_occlusion_mask(int height, int width, std::uint64_t seed) {
  if (height < 4 || width < 4) {
    throw DomainError("make_occlusion_mask: frame must be at least 4x4, got " +
                      std::to_string(height) + "x" + std::to_string(width));
  }
  const int mask_h = height / 4;
  const int mask_w = width / 4;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> top(0, height - mask_h);
  std::uniform_int_distribution<int> left(0, width - mask_w);
  Rect rect;
  rect.top = top(rng);
  rect.left = left(rng);
  rect.height = mask_h;
  rect.width = mask_w;
  OcclusionMask out = occlusion_mask_at(height, width, rect);
  out.seed = seed;
  return out;
}

OcclusionMask occlusion_mask_at(int height, int width, const Rect& rect) {
  if (rect.top < 0 || rect.left < 0 || rect.height < 0 || rect.width < 0 ||
      rect.top + rect.height > height || rect.left + rect.width > width) {
    throw DomainError("occlusion rectangle lies outside the frame");
  }
  OcclusionMask out{Mask(height, width), rect, 0};
  for (int y = rect.top; y < rect.top + rect.height; ++y) {
    for (int x = rect.left; x < rect.left + rect.width; ++x) out.occluded.set(y, x, true);
  }
  return out;
}

Image apply_mask(const Image& image, const OcclusionMask& mask, double fill) {
  require_same_spatial(image, mask.occluded, "apply_mask");
  Image out = image;
  const Rect& r = mask.rect;
  for (int y = r.top; y < r.top + r.height; ++y) {
    for (int x = r.left; x < r.left + r.width; ++x) {
      for (int c = 0; c < image.channels(); ++c) out(y, x, c) = fill;
    }
  }
  return out;
}

double mean_intensity(const Image& image) {
  if (image.empty()) throw ShapeError("mean_intensity: empty image");
  double sum = 0.0;
  for (double v : image.data()) sum += v;
  return sum / static_cast<double>(image.size());
}

DepthPseudoLabel augmented_depth_target(const DepthMap& depth_target_estimate,
                                        const DepthMap& depth_source_pred,
                                        const CameraIntrinsics& intrinsics,
                                        const PoseSE3& target_to_source) {
  require_same_shape(depth_target_estimate, depth_source_pred, "augmented_depth_target");
  const WarpField warp = warp_field(depth_target_estimate, intrinsics, target_to_source);
  const SampledGrid sampled = synthesize_view(depth_source_pred, warp);
  const PoseSE3 source_to_target = pose_inverse(target_to_source);

  const int h = depth_target_estimate.height();
  const int w = depth_target_estimate.width();
  DepthPseudoLabel out{DepthMap(h, w, 1), Mask(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!sampled.valid(y, x) || !(sampled.values(y, x) > 0.0)) continue;
      const Eigen::Vector3d source_point = backproject(
          Eigen::Vector2d(warp.coords(y, x, 0), warp.coords(y, x, 1)), sampled.values(y, x),
          intrinsics);
      const double z = source_to_target.apply(source_point).z();
      if (!(z > kBehindCameraEpsilon)) continue;
      out.depth(y, x) = z;
      out.valid.set(y, x, true);
    }
  }
  return out;
}

Mask supervision_mask(const OcclusionMask& mask, const Mask& valid) {
  return mask_and(mask_not(mask.occluded), valid);
}

}  // namespace occdepth
