#include "occdepth/toy.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "occdepth/errors.hpp"
#include "occdepth/io.hpp"
#include "occdepth/nmf.hpp"
#include "occdepth/sampler.hpp"

namespace occdepth {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Chains dL/dcoords into dL/ddepth through the warp's per-pixel derivative.
void accumulate_depth_grad(const WarpField& warp, const Grid& grad_coords, Grid& grad_depth) {
  for (int y = 0; y < warp.height(); ++y) {
    for (int x = 0; x < warp.width(); ++x) {
      if (!warp.valid(y, x)) continue;
      grad_depth(y, x) += grad_coords(y, x, 0) * warp.dcoords_ddepth(y, x, 0) +
                          grad_coords(y, x, 1) * warp.dcoords_ddepth(y, x, 1);
    }
  }
}

PoseVector accumulate_pose_grad(const std::vector<WarpPoseJacobian>& jac, const WarpField& warp,
                                const Grid& grad_coords) {
  PoseVector out = PoseVector::Zero();
  for (int y = 0; y < warp.height(); ++y) {
    for (int x = 0; x < warp.width(); ++x) {
      if (!warp.valid(y, x)) continue;
      const WarpPoseJacobian& j = jac[static_cast<std::size_t>(y) * warp.width() + x];
      out += grad_coords(y, x, 0) * j.row(0).transpose() + grad_coords(y, x, 1) * j.row(1).transpose();
    }
  }
  return out;
}

Grid pose_grad_grid(const PoseVector& g) {
  Grid out(1, 1, 6);
  for (int i = 0; i < 6; ++i) out[static_cast<std::size_t>(i)] = g(i);
  return out;
}

// sample_bilinear restricted to the warp's validity.
SampledGrid warp_grid(const Grid& grid, const WarpField& warp) { return synthesize_view(grid, warp); }

std::string pose_key(std::size_t s) { return "pose" + std::to_string(s); }

}  // namespace

DepthMap ToyModel::depth() const {
  DepthMap out(depth_params.height(), depth_params.width(), 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = d_min + (d_max - d_min) * sigmoid(depth_params[i]);
  }
  return out;
}

Grid ToyModel::depth_jacobian() const {
  Grid out(depth_params.height(), depth_params.width(), 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = sigmoid(depth_params[i]);
    out[i] = (d_max - d_min) * s * (1.0 - s);
  }
  return out;
}

double ToyModel::param_for_depth(double depth_mm) const {
  if (!(depth_mm > d_min && depth_mm < d_max)) {
    throw DomainError("toy depth " + std::to_string(depth_mm) + " outside (d_min, d_max)");
  }
  const double s = (depth_mm - d_min) / (d_max - d_min);
  return std::log(s / (1.0 - s));
}

PoseSE3 pose_from_vector(const PoseVector& v) {
  return PoseSE3::from_axis_angle(v.head<3>(), v.tail<3>());
}

PoseVector pose_to_vector(const PoseSE3& pose) {
  PoseVector out;
  const Eigen::AngleAxisd aa(pose.rotation);
  out.head<3>() = aa.angle() * aa.axis();
  out.tail<3>() = pose.translation;
  return out;
}

void RunConfig::validate() const {
  intrinsics.validate();
  scene.validate();
  weights.validate();
  if (steps < 1) throw DomainError("run config: steps must be >= 1");
  if (!(learning_rate >= 0.0) || !(pose_learning_rate >= 0.0)) {
    throw DomainError("run config: learning rates must be non-negative");
  }
  if (nmf_k < 1) throw DomainError("run config: nmf_k must be >= 1");
  if (world_to_sources.empty() || world_to_sources.size() > 2) {
    throw DomainError("run config: one or two source frames required");
  }
  if (!(d_min > 0.0 && d_max > d_min)) throw DomainError("run config: need 0 < d_min < d_max");
  if (!(init_depth_mm > d_min && init_depth_mm < d_max)) {
    throw DomainError("run config: init_depth_mm must lie in (d_min, d_max)");
  }
  if (corrupt_occluded_init && !(corrupt_depth_mm > d_min && corrupt_depth_mm < d_max)) {
    throw DomainError("run config: corrupt_depth_mm must lie in (d_min, d_max)");
  }
  if (!(seg_temperature > 0.0)) throw DomainError("run config: seg_temperature must be > 0");
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("scene")) c.scene = io::scene_from_json(j["scene"]);
    if (j.contains("intrinsics")) c.intrinsics = io::intrinsics_from_json(j["intrinsics"]);
    if (j.contains("image_size")) {
      const int size = j["image_size"].get<int>();
      c.intrinsics = {static_cast<double>(size), static_cast<double>(size), (size - 1) / 2.0,
                      (size - 1) / 2.0, size, size};
    }
    if (j.contains("pose_target")) c.world_to_target = io::pose_from_json(j["pose_target"]);
    if (j.contains("pose_sources")) {
      c.world_to_sources.clear();
      for (const auto& p : j["pose_sources"]) c.world_to_sources.push_back(io::pose_from_json(p));
    }
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      c.weights.photometric = w.value("photometric", c.weights.photometric);
      c.weights.smoothness = w.value("smoothness", c.weights.smoothness);
      c.weights.depth = w.value("depth", c.weights.depth);
      c.weights.semantic = w.value("semantic", c.weights.semantic);
    }
    c.smoothness.normalize_depth = j.value("smoothness_normalized", c.smoothness.normalize_depth);
    c.augmentation = j.value("augmentation", c.augmentation);
    c.mask_seed = j.value("mask_seed", c.mask_seed);
    c.mask_fill = j.value("mask_fill", c.mask_fill);
    c.segmentation = j.value("segmentation", c.segmentation);
    c.nmf_k = j.value("nmf_k", c.nmf_k);
    c.nmf_iters = j.value("nmf_iters", c.nmf_iters);
    c.seg_temperature = j.value("seg_temperature", c.seg_temperature);
    if (j.contains("semantic_masks")) {
      const std::string mode = j["semantic_masks"].get<std::string>();
      if (mode == "per_source") {
        c.semantic_masks = SemanticMaskMode::per_source;
      } else if (mode == "shared") {
        c.semantic_masks = SemanticMaskMode::shared;
      } else {
        throw DomainError("run config: semantic_masks must be per_source or shared");
      }
    }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.steps = j.value("steps", c.steps);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.known_pose = j.value("known_pose", c.known_pose);
    c.pose_init_noise = j.value("pose_init_noise", c.pose_init_noise);
    c.pose_learning_rate = j.value("pose_learning_rate", c.pose_learning_rate);
    c.d_min = j.value("d_min", c.d_min);
    c.d_max = j.value("d_max", c.d_max);
    c.init_depth_mm = j.value("init_depth_mm", c.init_depth_mm);
    c.corrupt_occluded_init = j.value("corrupt_occluded_init", c.corrupt_occluded_init);
    c.corrupt_depth_mm = j.value("corrupt_depth_mm", c.corrupt_depth_mm);
    c.eval_median_scale = j.value("eval_median_scale", c.eval_median_scale);
    c.eval_cap_mm = j.value("eval_cap_mm", c.eval_cap_mm);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json sources = nlohmann::json::array();
  for (const PoseSE3& p : c.world_to_sources) sources.push_back(io::pose_to_json(p));
  return {{"scene", io::scene_to_json(c.scene)},
          {"intrinsics", io::intrinsics_to_json(c.intrinsics)},
          {"pose_target", io::pose_to_json(c.world_to_target)},
          {"pose_sources", sources},
          {"weights",
           {{"photometric", c.weights.photometric},
            {"smoothness", c.weights.smoothness},
            {"depth", c.weights.depth},
            {"semantic", c.weights.semantic}}},
          {"smoothness_normalized", c.smoothness.normalize_depth},
          {"augmentation", c.augmentation},
          {"mask_seed", c.mask_seed},
          {"mask_fill", c.mask_fill},
          {"segmentation", c.segmentation},
          {"nmf_k", c.nmf_k},
          {"nmf_iters", c.nmf_iters},
          {"seg_temperature", c.seg_temperature},
          {"semantic_masks",
           c.semantic_masks == SemanticMaskMode::per_source ? "per_source" : "shared"},
          {"learning_rate", c.learning_rate},
          {"steps", c.steps},
          {"output_dir", c.output_dir},
          {"known_pose", c.known_pose},
          {"pose_init_noise", c.pose_init_noise},
          {"pose_learning_rate", c.pose_learning_rate},
          {"d_min", c.d_min},
          {"d_max", c.d_max},
          {"init_depth_mm", c.init_depth_mm},
          {"corrupt_occluded_init", c.corrupt_occluded_init},
          {"corrupt_depth_mm", c.corrupt_depth_mm},
          {"eval_median_scale", c.eval_median_scale},
          {"eval_cap_mm", c.eval_cap_mm},
          {"seed", c.seed}};
}

ToyProblem make_toy_problem(const RunConfig& config) {
  config.validate();
  ToyProblem problem;
  problem.config = config;
  const RenderedView target = render_view(config.scene, config.intrinsics, config.world_to_target);
  problem.target_image = target.image;
  problem.target_depth_gt = target.depth;
  for (const PoseSE3& pose : config.world_to_sources) {
    problem.source_images.push_back(render_view(config.scene, config.intrinsics, pose).image);
    problem.target_to_source.push_back(relative_pose(config.world_to_target, pose));
  }
  const int h = config.intrinsics.height;
  const int w = config.intrinsics.width;
  problem.occlusion = make_occlusion_mask(h, w, config.mask_seed);
  problem.masked_target = apply_mask(problem.target_image, problem.occlusion, config.mask_fill);

  if (config.segmentation) {
    // Stacking order: previous source, target, next source.
    std::vector<Image> views;
    views.push_back(problem.source_images.front());
    views.push_back(problem.target_image);
    if (problem.source_images.size() > 1) views.push_back(problem.source_images.back());
    const FeatureMatrix features = extract_features(views, FilterBank::seeded(config.seed));
    NmfOptions options;
    options.max_iters = config.nmf_iters;
    options.seed = config.seed;
    const NmfResult nmf = nmf_factorize(features.data, config.nmf_k, options);
    std::vector<SegmentationMap> segs =
        build_segmentations(nmf.P, features.views, h, w, config.seg_temperature);
    problem.target_seg = segs[1];
    problem.source_segs.push_back(segs[0]);
    if (segs.size() > 2) problem.source_segs.push_back(segs[2]);
  }
  return problem;
}

ToyModel initial_model(const ToyProblem& problem) {
  const RunConfig& c = problem.config;
  ToyModel model;
  model.d_min = c.d_min;
  model.d_max = c.d_max;
  model.depth_params = Grid(c.intrinsics.height, c.intrinsics.width, 1,
                            model.param_for_depth(c.init_depth_mm));
  if (c.corrupt_occluded_init) {
    const double corrupt = model.param_for_depth(c.corrupt_depth_mm);
    for (int y = 0; y < model.depth_params.height(); ++y) {
      for (int x = 0; x < model.depth_params.width(); ++x) {
        if (problem.occlusion.occluded(y, x)) model.depth_params(y, x) = corrupt;
      }
    }
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const PoseSE3& truth : problem.target_to_source) {
    PoseVector v = pose_to_vector(truth);
    if (!c.known_pose && c.pose_init_noise > 0.0) {
      for (int i = 0; i < 6; ++i) v(i) += c.pose_init_noise * normal(rng);
    }
    model.pose_params.push_back(v);
  }
  return model;
}

ToyObjective evaluate_objective(const ToyProblem& problem, const ToyModel& model) {
  const RunConfig& c = problem.config;
  const CameraIntrinsics& k = c.intrinsics;
  const DepthMap depth = model.depth();
  const int h = depth.height();
  const int w = depth.width();
  const std::size_t n_sources = problem.source_images.size();
  const double per_source = 1.0 / static_cast<double>(n_sources);

  std::vector<PoseSE3> poses;
  std::vector<WarpField> warps;
  std::vector<std::vector<WarpPoseJacobian>> pose_jacobians;
  for (std::size_t s = 0; s < n_sources; ++s) {
    poses.push_back(c.known_pose ? problem.target_to_source[s] : pose_from_vector(model.pose_params[s]));
    warps.push_back(warp_field(depth, k, poses[s]));
    if (!c.known_pose) {
      const PoseVector& v = model.pose_params[s];
      pose_jacobians.push_back(warp_pose_jacobian(depth, k, v.head<3>(), v.tail<3>()));
    }
  }

  // Each component's gradients are expressed as "depth" plus one "pose<s>"
  // entry per source, so total_loss can combine them.
  auto coords_component = [&](std::size_t s, const Grid& grad_coords, LossValue& into) {
    Grid& gd = into.grads.try_emplace("depth", h, w, 1).first->second;
    accumulate_depth_grad(warps[s], grad_coords, gd);
    if (!c.known_pose) {
      Grid& gp = into.grads.try_emplace(pose_key(s), 1, 1, 6).first->second;
      const Grid add = pose_grad_grid(accumulate_pose_grad(pose_jacobians[s], warps[s], grad_coords));
      for (std::size_t i = 0; i < 6; ++i) gp[i] += add[i];
    }
  };

  std::vector<LossComponent> components;

  for (std::size_t s = 0; s < n_sources; ++s) {
    const SampledGrid recon = synthesize_view(problem.source_images[s], warps[s]);
    const LossValue photo = photometric_loss(problem.target_image, recon);
    const BilinearGradients back =
        sample_bilinear_grad(problem.source_images[s], warps[s].coords, photo.grad("recon"));
    LossValue chained;
    chained.value = photo.value;
    coords_component(s, back.coords, chained);
    components.push_back({LossTerm::photometric, std::move(chained), per_source});
  }

  {
    // Edge weights come from the image the depth network would see.
    const Image& guide = c.augmentation ? problem.masked_target : problem.target_image;
    LossValue smooth = smoothness_loss(depth, guide, c.smoothness);
    components.push_back({LossTerm::smoothness, std::move(smooth), 1.0});
  }

  if (c.augmentation) {
    for (std::size_t s = 0; s < n_sources; ++s) {
      // The toy model's prediction does not depend on its input frame, so
      // the source-frame prediction is the same depth map. The pseudo-label
      // is a constant: no gradient flows into it.
      const DepthPseudoLabel label = augmented_depth_target(depth, depth, k, poses[s]);
      const Mask support = supervision_mask(problem.occlusion, label.valid);
      if (support.count() == 0) continue;
      const LossValue dl = depth_loss(depth, label.depth, support);
      LossValue chained;
      chained.value = dl.value;
      chained.grads.emplace("depth", dl.grad("depth_target"));
      components.push_back({LossTerm::depth, std::move(chained), per_source});
    }
  }

  if (c.segmentation) {
    const std::size_t prev = 0;
    const std::size_t next = n_sources > 1 ? 1 : 0;
    const SampledGrid warped_prev = warp_grid(problem.source_segs[prev], warps[prev]);
    const SampledGrid warped_next = warp_grid(problem.source_segs[next], warps[next]);
    Mask mask_prev = warped_prev.valid;
    Mask mask_next = warped_next.valid;
    if (c.semantic_masks == SemanticMaskMode::shared) {
      mask_prev = mask_and(mask_prev, mask_next);
      mask_next = mask_prev;
    }
    if (mask_prev.count() > 0 && mask_next.count() > 0) {
      const LossValue ss = semantic_consistency_loss(problem.target_seg, warped_prev.values,
                                                     warped_next.values, mask_prev, mask_next);
      LossValue chained;
      chained.value = ss.value;
      const BilinearGradients back_prev = sample_bilinear_grad(
          problem.source_segs[prev], warps[prev].coords, ss.grad("warped_prev"));
      coords_component(prev, back_prev.coords, chained);
      const BilinearGradients back_next = sample_bilinear_grad(
          problem.source_segs[next], warps[next].coords, ss.grad("warped_next"));
      coords_component(next, back_next.coords, chained);
      components.push_back({LossTerm::semantic, std::move(chained), 1.0});
    }
  }

  const LossValue total = total_loss(c.weights, components);
  ToyObjective out;
  out.value = total.value;
  out.grad_depth_params = Grid(h, w, 1);
  if (const auto it = total.grads.find("depth"); it != total.grads.end()) {
    const Grid jac = model.depth_jacobian();
    for (std::size_t i = 0; i < jac.size(); ++i) out.grad_depth_params[i] = it->second[i] * jac[i];
  }
  out.grad_pose.assign(n_sources, PoseVector::Zero());
  for (std::size_t s = 0; s < n_sources; ++s) {
    if (const auto it = total.grads.find(pose_key(s)); it != total.grads.end()) {
      for (int i = 0; i < 6; ++i) out.grad_pose[s](i) = it->second[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

TrainReport train_toy(const RunConfig& config) {
  const ToyProblem problem = make_toy_problem(config);
  ToyModel model = initial_model(problem);
  TrainReport report;
  report.loss_curve.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 0; step < config.steps; ++step) {
    const ToyObjective objective = evaluate_objective(problem, model);
    if (!std::isfinite(objective.value)) {
      throw DivergenceError("train_toy: non-finite loss at step " + std::to_string(step));
    }
    report.loss_curve.push_back(objective.value);
    for (std::size_t i = 0; i < model.depth_params.size(); ++i) {
      model.depth_params[i] -= config.learning_rate * objective.grad_depth_params[i];
    }
    if (!config.known_pose) {
      for (std::size_t s = 0; s < model.pose_params.size(); ++s) {
        model.pose_params[s] -= config.pose_learning_rate * objective.grad_pose[s];
      }
    }
    report.steps_run = step + 1;
  }

  report.final_depth = model.depth();
  report.gt_depth = problem.target_depth_gt;
  MetricsOptions options;
  options.cap_mm = config.eval_cap_mm;
  options.median_scale = config.eval_median_scale;
  report.metrics = compute_metrics(report.final_depth, report.gt_depth, options);
  if (config.augmentation || config.corrupt_occluded_init) {
    report.occluded_metrics = compute_metrics(report.final_depth, report.gt_depth, options,
                                              &problem.occlusion.occluded);
  }
  report.model = std::move(model);
  return report;
}

bool windowed_non_increasing(const std::vector<double>& curve, int window) {
  if (window < 1) throw DomainError("window must be >= 1");
  for (std::size_t i = 0; i + static_cast<std::size_t>(window) < curve.size(); ++i) {
    if (curve[i + static_cast<std::size_t>(window)] > curve[i]) return false;
  }
  return true;
}

}  // namespace occdepth
