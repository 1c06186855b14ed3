#include "occdepth/losses.hpp"

#include <cmath>

#include "occdepth/errors.hpp"
#include "occdepth/nmf.hpp"

namespace occdepth {
namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

const Grid& LossValue::grad(const std::string& name) const {
  const auto it = grads.find(name);
  if (it == grads.end()) throw DomainError("loss has no gradient named '" + name + "'");
  return it->second;
}

double LossWeights::of(LossTerm term) const {
  switch (term) {
    case LossTerm::photometric: return photometric;
    case LossTerm::smoothness: return smoothness;
    case LossTerm::depth: return depth;
    case LossTerm::semantic: return semantic;
  }
  return 0.0;
}

void LossWeights::validate() const {
  if (!(photometric >= 0.0 && smoothness >= 0.0 && depth >= 0.0 && semantic >= 0.0)) {
    throw DomainError("loss weights must be non-negative");
  }
}

LossValue photometric_loss(const Image& target, const SampledGrid& recon) {
  require_same_shape(target, recon.values, "photometric_loss");
  require_same_spatial(target, recon.valid, "photometric_loss");
  const std::size_t valid = recon.valid.count();
  if (valid == 0) throw EmptySupportError("photometric_loss has no valid pixel");

  const int channels = target.channels();
  const double norm = 1.0 / (static_cast<double>(valid) * channels);
  Grid grad(target.height(), target.width(), channels);
  double sum = 0.0;
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      if (!recon.valid(y, x)) continue;
      for (int c = 0; c < channels; ++c) {
        const double diff = recon.values(y, x, c) - target(y, x, c);
        sum += std::abs(diff);
        grad(y, x, c) = sign(diff) * norm;
      }
    }
  }
  LossValue out;
  out.value = sum * norm;
  out.grads.emplace("recon", std::move(grad));
  return out;
}

LossValue depth_loss(const DepthMap& depth_target, const DepthMap& depth_source_warped,
                     const Mask& mask) {
  require_same_shape(depth_target, depth_source_warped, "depth_loss");
  require_same_spatial(depth_target, mask, "depth_loss");
  if (depth_target.channels() != 1) throw ShapeError("depth_loss: depth must be single-channel");
  const std::size_t support = mask.count();
  if (support == 0) throw EmptySupportError("depth_loss mask is all zero");

  const double norm = 1.0 / static_cast<double>(support);
  Grid grad_target(depth_target.height(), depth_target.width(), 1);
  Grid grad_source(depth_target.height(), depth_target.width(), 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double diff = depth_target[i] - depth_source_warped[i];
    sum += std::abs(diff);
    grad_target[i] = sign(diff) * norm;
    grad_source[i] = -grad_target[i];
  }
  LossValue out;
  out.value = sum * norm;
  out.grads.emplace("depth_target", std::move(grad_target));
  out.grads.emplace("depth_source", std::move(grad_source));
  return out;
}

LossValue smoothness_loss(const DepthMap& depth, const Image& image,
                          const SmoothnessOptions& options) {
  require_same_spatial(depth, image, "smoothness_loss");
  if (depth.channels() != 1) throw ShapeError("smoothness_loss: depth must be single-channel");
  const int h = depth.height();
  const int w = depth.width();
  const double n = static_cast<double>(depth.pixel_count());
  const Grid gray = channel_mean(image);

  double scale = 1.0;
  if (options.normalize_depth) {
    double mean = 0.0;
    for (double d : depth.data()) mean += d;
    mean /= n;
    if (!(mean > 0.0)) throw DomainError("smoothness_loss: mean depth must be positive");
    scale = 1.0 / mean;
  }

  // dL/d(scaled depth)
  Grid grad(h, w, 1);
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const double dd = (depth(y, x + 1) - depth(y, x)) * scale;
        const double weight = std::exp(-std::abs(gray(y, x + 1) - gray(y, x)));
        sum += std::abs(dd) * weight;
        const double g = sign(dd) * weight / n;
        grad(y, x + 1) += g;
        grad(y, x) -= g;
      }
      if (y + 1 < h) {
        const double dd = (depth(y + 1, x) - depth(y, x)) * scale;
        const double weight = std::exp(-std::abs(gray(y + 1, x) - gray(y, x)));
        sum += std::abs(dd) * weight;
        const double g = sign(dd) * weight / n;
        grad(y + 1, x) += g;
        grad(y, x) -= g;
      }
    }
  }

  if (options.normalize_depth) {
    // D~ = D / mu, mu = mean(D): dL/dD_k = g_k / mu - sum_j g_j D_j / (mu^2 n)
    double coupling = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) coupling += grad[i] * depth[i];
    coupling *= scale * scale / n;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = grad[i] * scale - coupling;
  }

  LossValue out;
  out.value = sum / n;
  out.grads.emplace("depth", std::move(grad));
  return out;
}

LossValue semantic_consistency_loss(const SegmentationMap& target_seg,
                                    const SegmentationMap& warped_prev,
                                    const SegmentationMap& warped_next,
                                    const Mask& mask_prev, const Mask& mask_next) {
  require_same_shape(target_seg, warped_prev, "semantic_consistency_loss (prev)");
  require_same_shape(target_seg, warped_next, "semantic_consistency_loss (next)");
  require_same_spatial(target_seg, mask_prev, "semantic_consistency_loss (prev mask)");
  require_same_spatial(target_seg, mask_next, "semantic_consistency_loss (next mask)");
  const std::size_t count_prev = mask_prev.count();
  const std::size_t count_next = mask_next.count();
  if (count_prev == 0 || count_next == 0) {
    throw EmptySupportError("semantic_consistency_loss mask is all zero");
  }

  const int h = target_seg.height();
  const int w = target_seg.width();
  const int classes = target_seg.channels();
  Grid grad_prev(h, w, classes);
  Grid grad_next(h, w, classes);
  const double norm_prev = 1.0 / static_cast<double>(count_prev);
  const double norm_next = 1.0 / static_cast<double>(count_next);
  double sum_prev = 0.0;
  double sum_next = 0.0;

  auto term = [](double p, double norm, double& sum, double& grad) {
    if (p > kLogEpsilon) {
      sum -= std::log(p);
      grad = -norm / p;
    } else {
      sum -= std::log(kLogEpsilon);
    }
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool use_prev = mask_prev(y, x);
      const bool use_next = mask_next(y, x);
      if (!use_prev && !use_next) continue;
      const int label = argmax_class(target_seg, y, x);
      if (use_prev) term(warped_prev(y, x, label), norm_prev, sum_prev, grad_prev(y, x, label));
      if (use_next) term(warped_next(y, x, label), norm_next, sum_next, grad_next(y, x, label));
    }
  }

  LossValue out;
  out.value = sum_prev * norm_prev + sum_next * norm_next;
  out.grads.emplace("warped_prev", std::move(grad_prev));
  out.grads.emplace("warped_next", std::move(grad_next));
  return out;
}

LossValue semantic_consistency_loss(const SegmentationMap& target_seg,
                                    const SegmentationMap& warped_prev,
                                    const SegmentationMap& warped_next, const Mask& mask) {
  return semantic_consistency_loss(target_seg, warped_prev, warped_next, mask, mask);
}

LossValue total_loss(const LossWeights& weights, const std::vector<LossComponent>& components) {
  weights.validate();
  LossValue out;
  for (const LossComponent& component : components) {
    const double factor = weights.of(component.term) * component.scale;
    out.value += factor * component.loss.value;
    for (const auto& [name, grad] : component.loss.grads) {
      auto [it, inserted] = out.grads.try_emplace(name, grad.height(), grad.width(),
                                                  grad.channels());
      require_same_shape(it->second, grad, ("total_loss gradient '" + name + "'").c_str());
      for (std::size_t i = 0; i < grad.size(); ++i) it->second[i] += factor * grad[i];
    }
  }
  return out;
}

}  // namespace occdepth
