#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "occdepth/augment.hpp"
#include "occdepth/geometry.hpp"
#include "occdepth/grid.hpp"
#include "occdepth/losses.hpp"
#include "occdepth/metrics.hpp"
#include "occdepth/synth.hpp"

namespace occdepth {

using PoseVector = Eigen::Matrix<double, 6, 1>;  // axis-angle, translation

/// Per-pixel depth d = d_min + (d_max - d_min) * sigmoid(param) plus one
/// 6-DoF pose vector per source frame.
struct ToyModel {
  Grid depth_params;
  std::vector<PoseVector> pose_params;
  double d_min = 1.0;
  double d_max = 150.0;

  DepthMap depth() const;
  /// d depth / d param, elementwise.
  Grid depth_jacobian() const;
  double param_for_depth(double depth_mm) const;
};

PoseSE3 pose_from_vector(const PoseVector& v);
PoseVector pose_to_vector(const PoseSE3& pose);

inline LossWeights toy_default_weights() {
  LossWeights w;
  w.smoothness = 1e-4;
  w.depth = 1e-3;
  return w;
}

enum class SemanticMaskMode {
  per_source,  // each source term uses its own warp validity
  shared,      // both terms use the intersection
};

struct RunConfig {
  Scene scene = Scene::plane(Eigen::Vector3d::UnitZ(), 50.0, Texture::seeded(7));
  CameraIntrinsics intrinsics = CameraIntrinsics::desk_default();
  PoseSE3 world_to_target = PoseSE3::identity();
  /// One or two adjacent frames ("previous" then "next").
  std::vector<PoseSE3> world_to_sources = {
      PoseSE3::from_translation({-2.0, -1.0, 0.0}),
      PoseSE3::from_translation({2.0, 1.0, 0.0})};

  /// Smoothness and the masked depth loss act on raw millimeters here,
  /// hence smaller weights than the library defaults.
  LossWeights weights = toy_default_weights();
  SmoothnessOptions smoothness;

  bool augmentation = false;
  std::uint64_t mask_seed = 0;
  double mask_fill = 0.0;

  bool segmentation = false;
  int nmf_k = 4;
  int nmf_iters = 200;
  double seg_temperature = 1.0;
  SemanticMaskMode semantic_masks = SemanticMaskMode::per_source;

  double learning_rate = 250.0;
  int steps = 2000;
  std::string output_dir = "out";

  bool known_pose = true;
  /// Std-dev of seeded noise added to the true pose vectors when the pose
  /// is learned.
  double pose_init_noise = 0.0;
  double pose_learning_rate = 1e-6;

  double d_min = 1.0;
  double d_max = 150.0;
  double init_depth_mm = 75.5;
  /// Start the occluded rectangle at `corrupt_depth_mm` instead.
  bool corrupt_occluded_init = false;
  double corrupt_depth_mm = 100.0;

  bool eval_median_scale = false;
  double eval_cap_mm = kScaredDepthCapMm;
  std::uint64_t seed = 0;

  /// Throws DomainError on out-of-range fields.
  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& config);

/// Fixed inputs of one toy run: rendered frames, pseudo-labels and masks.
struct ToyProblem {
  RunConfig config;
  Image target_image;
  DepthMap target_depth_gt;
  std::vector<Image> source_images;
  std::vector<PoseSE3> target_to_source;  // ground truth
  OcclusionMask occlusion;
  Image masked_target;
  SegmentationMap target_seg;
  std::vector<SegmentationMap> source_segs;
};

ToyProblem make_toy_problem(const RunConfig& config);
ToyModel initial_model(const ToyProblem& problem);

struct ToyObjective {
  double value = 0.0;
  Grid grad_depth_params;
  std::vector<PoseVector> grad_pose;
};

/// Total loss of the model on the problem and its gradient.
ToyObjective evaluate_objective(const ToyProblem& problem, const ToyModel& model);

struct TrainReport {
  std::vector<double> loss_curve;
  MetricsRecord metrics;
  /// Metrics restricted to the occlusion rectangle, when one is in play.
  std::optional<MetricsRecord> occluded_metrics;
  ToyModel model;
  DepthMap final_depth;
  DepthMap gt_depth;
  int steps_run = 0;
};

/// Plain gradient descent. Throws DivergenceError on a non-finite loss.
TrainReport train_toy(const RunConfig& config);

/// True when loss[i + window] <= loss[i] for every i.
bool windowed_non_increasing(const std::vector<double>& curve, int window);

}  // namespace occdepth
