#pragma once

#include <map>
#include <string>
#include <vector>

#include "occdepth/grid.hpp"
#include "occdepth/sampler.hpp"

namespace occdepth {

/// Lower clamp inside the cross-entropy logarithm.
inline constexpr double kLogEpsilon = 1e-7;

/// A scalar objective with gradients keyed by input name. Every gradient
/// grid has the shape of the input it differentiates.
struct LossValue {
  double value = 0.0;
  std::map<std::string, Grid> grads;

  const Grid& grad(const std::string& name) const;
};

enum class LossTerm { photometric, smoothness, depth, semantic };

struct LossWeights {
  double photometric = 1.0;
  double smoothness = 1e-3;
  double depth = 1.0;
  double semantic = 0.1;

  double of(LossTerm term) const;
  void validate() const;
};

/// Mean absolute difference over valid pixels and all channels.
/// Gradient key: "recon". Throws EmptySupportError with no valid pixel.
LossValue photometric_loss(const Image& target, const SampledGrid& recon);

/// Masked L1 between a target-frame depth and a warped source depth,
/// normalized by the number of mask pixels. Pixels with mask 0 are never
/// read. Gradient keys: "depth_target", "depth_source". Training treats the
/// warped source depth as a constant pseudo-label and ignores the latter.
LossValue depth_loss(const DepthMap& depth_target, const DepthMap& depth_source_warped,
                     const Mask& mask);

struct SmoothnessOptions {
  /// Divide depth by its mean before differencing (scale-invariant variant).
  bool normalize_depth = false;
};

/// Edge-aware first-order smoothness:
///   mean_p |dx D| exp(-|dx I|) + |dy D| exp(-|dy I|)
/// with forward differences, I the channel-mean image, and the mean taken
/// over all H x W pixels. Gradient key: "depth".
LossValue smoothness_loss(const DepthMap& depth, const Image& image,
                          const SmoothnessOptions& options = {});

/// Cross-entropy of the two warped source segmentations against the one-hot
/// arg-max of the target segmentation. Each source term is normalized by its
/// own mask count and the two terms are summed. Gradient keys:
/// "warped_prev", "warped_next".
LossValue semantic_consistency_loss(const SegmentationMap& target_seg,
                                    const SegmentationMap& warped_prev,
                                    const SegmentationMap& warped_next,
                                    const Mask& mask_prev, const Mask& mask_next);

/// Same, with one mask shared by both terms.
LossValue semantic_consistency_loss(const SegmentationMap& target_seg,
                                    const SegmentationMap& warped_prev,
                                    const SegmentationMap& warped_next, const Mask& mask);

struct LossComponent {
  LossTerm term;
  LossValue loss;
  /// Extra multiplier on top of the term weight (e.g. averaging over sources).
  double scale = 1.0;
};

/// Weighted sum of component values; same-named gradients accumulate.
LossValue total_loss(const LossWeights& weights, const std::vector<LossComponent>& components);

}  // namespace occdepth
