// occdepth command-line interface.
//
// Exit codes: 0 success, 1 domain/validation error, 2 IO error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "occdepth/augment.hpp"
#include "occdepth/errors.hpp"
#include "occdepth/geometry.hpp"
#include "occdepth/gradcheck.hpp"
#include "occdepth/io.hpp"
#include "occdepth/metrics.hpp"
#include "occdepth/nmf.hpp"
#include "occdepth/sampler.hpp"
#include "occdepth/synth.hpp"
#include "occdepth/toy.hpp"

namespace fs = std::filesystem;
using namespace occdepth;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "out";
};

std::string padded(int i) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%02d", i);
  return buffer;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string scene;
  std::string intrinsics;
  std::string pose_target;
  std::string pose_source;
};

void run_synth(const GlobalOptions& g, const SynthArgs& a) {
  RunConfig defaults;
  if (!g.config.empty()) defaults = run_config_from_json(io::read_json(g.config));
  Scene scene = a.scene.empty() ? defaults.scene : io::scene_from_json(io::read_json(a.scene));
  if (g.seed) scene.texture = Texture::seeded(*g.seed, scene.texture.base_period_mm, scene.texture.contrast);
  const CameraIntrinsics k =
      a.intrinsics.empty() ? defaults.intrinsics : io::intrinsics_from_json(io::read_json(a.intrinsics));
  const PoseSE3 pose_t =
      a.pose_target.empty() ? defaults.world_to_target : io::pose_from_json(io::read_json(a.pose_target));
  const PoseSE3 pose_s = a.pose_source.empty() ? defaults.world_to_sources.back()
                                               : io::pose_from_json(io::read_json(a.pose_source));
  const ViewPair pair = make_pair(scene, k, pose_t, pose_s);
  const fs::path out = g.out;
  io::write_png(out / "target.png", pair.target_image);
  io::write_pfm(out / "target_depth.pfm", pair.target_depth);
  io::write_png(out / "source.png", pair.source_image);
  io::write_pfm(out / "source_depth.pfm", pair.source_depth);
  io::write_json(out / "pose_t_to_s.json", io::pose_to_json(pair.target_to_source));
  io::write_json(out / "intrinsics.json", io::intrinsics_to_json(k));
  io::write_json(out / "scene.json", io::scene_to_json(scene));
  std::cout << "wrote synthetic pair to " << out.string() << "\n";
}

// ---- warp -----------------------------------------------------------------

struct WarpArgs {
  std::string source;
  std::string depth;
  std::string intrinsics;
  std::string pose;
};

void run_warp(const GlobalOptions& g, const WarpArgs& a) {
  const Image source = io::read_png(a.source);
  const DepthMap depth = io::read_pfm(a.depth);
  const CameraIntrinsics k = io::intrinsics_from_json(io::read_json(a.intrinsics));
  const PoseSE3 pose = io::pose_from_json(io::read_json(a.pose));
  const WarpField warp = warp_field(depth, k, pose);
  const SampledGrid recon = synthesize_view(source, warp);
  const fs::path out = g.out;
  io::write_png(out / "reconstructed.png", recon.values);
  io::write_mask_png(out / "valid.png", recon.valid);
  io::write_pfm(out / "src_depth.pfm", warp.src_depth);
  std::cout << "valid pixels: " << recon.valid.count() << " / " << recon.valid.size() << "\n";
}

// ---- augment --------------------------------------------------------------

struct AugmentArgs {
  std::string image;
  std::optional<std::uint64_t> mask_seed;
  std::string fill = "0";
  std::string depth_target;
  std::string depth_source;
  std::string intrinsics;
  std::string pose;
};

void run_augment(const GlobalOptions& g, const AugmentArgs& a) {
  const Image image = io::read_png(a.image);
  const std::uint64_t seed = a.mask_seed.value_or(g.seed.value_or(0));
  const OcclusionMask mask = make_occlusion_mask(image.height(), image.width(), seed);
  double fill = 0.0;
  if (a.fill == "mean") {
    fill = mean_intensity(image);
  } else {
    try {
      fill = std::stod(a.fill);
    } catch (const std::exception&) {
      throw DomainError("--fill must be a number or 'mean'");
    }
  }
  const fs::path out = g.out;
  io::write_png(out / "masked.png", apply_mask(image, mask, fill));
  io::write_mask_png(out / "mask.png", mask.occluded);
  io::write_json(out / "mask.json", {{"top", mask.rect.top},
                                     {"left", mask.rect.left},
                                     {"height", mask.rect.height},
                                     {"width", mask.rect.width},
                                     {"seed", mask.seed},
                                     {"fill", fill}});
  if (!a.depth_target.empty()) {
    if (a.depth_source.empty() || a.intrinsics.empty() || a.pose.empty()) {
      throw DomainError("pseudo-label export needs --depth-source, --intrinsics and --pose");
    }
    const DepthPseudoLabel label = augmented_depth_target(
        io::read_pfm(a.depth_target), io::read_pfm(a.depth_source),
        io::intrinsics_from_json(io::read_json(a.intrinsics)), io::pose_from_json(io::read_json(a.pose)));
    io::write_pfm(out / "pseudo_depth.pfm", label.depth);
    io::write_mask_png(out / "pseudo_valid.png", label.valid);
    io::write_mask_png(out / "supervision_mask.png", supervision_mask(mask, label.valid));
  }
  std::cout << "mask rect top=" << mask.rect.top << " left=" << mask.rect.left
            << " size=" << mask.rect.height << "x" << mask.rect.width << "\n";
}

// ---- nmf-seg --------------------------------------------------------------

struct NmfArgs {
  std::vector<std::string> images;
  int k = 4;
  int iters = 200;
  double tol = 1e-5;
  double temperature = 1.0;
  bool probs = false;
};

void run_nmf_seg(const GlobalOptions& g, const NmfArgs& a) {
  std::vector<Image> images;
  for (const std::string& path : a.images) images.push_back(io::read_png(path));
  const std::uint64_t seed = g.seed.value_or(0);
  FeatureMatrix features;
  try {
    features = extract_features(images, FilterBank::seeded(seed));
  } catch (const ShapeError& e) {
    throw ShapeError(std::string(e.what()) + " (inputs: " + a.images.front() + ", ...)");
  }
  NmfOptions options;
  options.max_iters = a.iters;
  options.tol = a.tol;
  options.seed = seed;
  const NmfResult nmf = nmf_factorize(features.data, a.k, options);
  const std::vector<SegmentationMap> segs =
      build_segmentations(nmf.P, features.views, features.height, features.width, a.temperature);
  const fs::path out = g.out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string stem = "seg_" + padded(static_cast<int>(i));
    io::write_png_u8(out / (stem + ".png"), argmax_labels(segs[i]));
    if (a.probs) {
      for (int c = 0; c < segs[i].channels(); ++c) {
        Grid channel(segs[i].height(), segs[i].width(), 1);
        for (int y = 0; y < channel.height(); ++y) {
          for (int x = 0; x < channel.width(); ++x) channel(y, x) = segs[i](y, x, c);
        }
        io::write_pfm(out / (stem + "_class" + padded(c) + ".pfm"), channel);
      }
    }
  }
  const double final_error = nmf.error_trace.back();
  const double defect = orthogonality_defect(nmf.Q);
  io::write_json(out / "nmf_diagnostics.json", {{"k", a.k},
                                                {"iterations", nmf.iterations_run},
                                                {"final_frobenius_error", final_error},
                                                {"orthogonality_defect", defect},
                                                {"error_trace", nmf.error_trace}});
  std::cout << "frobenius error: " << final_error << "\n"
            << "orthogonality defect: " << defect << "\n"
            << "iterations: " << nmf.iterations_run << "\n";
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> pred;
  std::vector<std::string> gt;
  double cap = kScaredDepthCapMm;
  bool no_median_scale = false;
  double threshold = 1.25;
};

void run_eval(const GlobalOptions& g, const EvalArgs& a) {
  if (a.pred.size() != a.gt.size()) {
    throw DomainError("eval: --pred and --gt need the same number of files");
  }
  MetricsOptions options;
  options.cap_mm = a.cap;
  options.median_scale = !a.no_median_scale;
  options.delta_threshold = a.threshold;
  std::vector<FrameMetrics> frames(a.pred.size());
  std::vector<DepthMap> preds;
  std::vector<DepthMap> gts;
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    preds.push_back(io::read_pfm(a.pred[i]));
    gts.push_back(io::read_pfm(a.gt[i]));
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i].frame = fs::path(a.pred[i]).stem().string();
    try {
      frames[i].record = compute_metrics(preds[i], gts[i], options);
    } catch (const DomainError& e) {
      throw DomainError(a.pred[i] + ": " + e.what());
    } catch (const ShapeError& e) {
      throw ShapeError(a.pred[i] + ": " + e.what());
    }
  }
  std::ostringstream csv;
  write_metrics_csv(csv, frames);
  io::write_file_atomic(fs::path(g.out) / "metrics.csv", csv.str());
  std::cout << csv.str();
}

// ---- train-toy ------------------------------------------------------------

struct TrainArgs {
  std::optional<int> steps;
  std::optional<double> lr;
  std::optional<bool> da;
  std::optional<bool> ss;
  std::optional<int> k;
  std::optional<std::uint64_t> mask_seed;
};

void run_train(const GlobalOptions& g, const TrainArgs& a) {
  RunConfig config;
  if (!g.config.empty()) config = run_config_from_json(io::read_json(g.config));
  if (a.steps) config.steps = *a.steps;
  if (a.lr) config.learning_rate = *a.lr;
  if (a.da) config.augmentation = *a.da;
  if (a.ss) config.segmentation = *a.ss;
  if (a.k) config.nmf_k = *a.k;
  if (a.mask_seed) config.mask_seed = *a.mask_seed;
  if (g.seed) config.seed = *g.seed;
  config.output_dir = g.out;
  config.validate();

  const TrainReport report = train_toy(config);
  const fs::path out = g.out;
  std::ostringstream curve;
  curve << "step,loss\n";
  char buffer[64];
  for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
    std::snprintf(buffer, sizeof(buffer), "%zu,%.17g\n", i, report.loss_curve[i]);
    curve << buffer;
  }
  io::write_file_atomic(out / "loss_curve.csv", curve.str());
  io::write_pfm(out / "depth.pfm", report.final_depth);
  io::write_pfm(out / "gt_depth.pfm", report.gt_depth);
  std::vector<FrameMetrics> frames{{"target", report.metrics}};
  if (report.occluded_metrics) frames.push_back({"occluded_region", *report.occluded_metrics});
  std::ostringstream csv;
  write_metrics_csv(csv, frames);
  io::write_file_atomic(out / "metrics.csv", csv.str());
  io::write_json(out / "run_config.json", run_config_to_json(config));
  std::cout << "steps: " << report.steps_run << "\n"
            << "final loss: " << report.loss_curve.back() << "\n"
            << "abs_rel: " << report.metrics.abs_rel << "\n";
}

// ---- grad-check -----------------------------------------------------------

struct GradArgs {
  std::string target = "all";
  int instances = 20;
};

bool run_grad_check(const GlobalOptions& g, const GradArgs& a) {
  std::vector<std::string> targets;
  if (a.target == "all") {
    targets = grad_check_targets();
  } else {
    targets.push_back(a.target);
  }
  bool all_passed = true;
  for (const std::string& name : targets) {
    const GradCheckReport r = grad_check(name, g.seed.value_or(0), a.instances);
    std::printf("%-28s %s  max_rel_error=%.3e  instances=%d  checked=%zu  skipped=%zu%s\n",
                r.target.c_str(), r.passed ? "PASS" : "FAIL", r.max_rel_error, r.instances,
                r.entries_checked, r.entries_skipped,
                r.masked_gradients_zero ? "" : "  (non-zero gradient under mask)");
    all_passed = all_passed && r.passed;
  }
  return all_passed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occlusion-aware self-supervised depth toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for every stochastic step");
  app.add_option("--config", global.config, "Run configuration JSON");
  app.add_option("--out", global.out, "Output directory")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic target/source pair");
  synth_cmd->add_option("--scene", synth.scene, "Scene JSON {kind, params, texture_seed}");
  synth_cmd->add_option("--intrinsics", synth.intrinsics, "Intrinsics JSON");
  synth_cmd->add_option("--pose-target", synth.pose_target, "World-to-target pose JSON");
  synth_cmd->add_option("--pose-source", synth.pose_source, "World-to-source pose JSON");

  WarpArgs warp;
  auto* warp_cmd = app.add_subcommand("warp", "Reconstruct the target view from a source image");
  warp_cmd->add_option("--source", warp.source, "Source PNG")->required();
  warp_cmd->add_option("--depth", warp.depth, "Target depth PFM (mm)")->required();
  warp_cmd->add_option("--intrinsics", warp.intrinsics, "Intrinsics JSON")->required();
  warp_cmd->add_option("--pose", warp.pose, "Target-to-source pose JSON")->required();

  AugmentArgs augment;
  auto* augment_cmd = app.add_subcommand("augment", "Apply an occlusion mask to a frame");
  augment_cmd->add_option("--image", augment.image, "Target PNG")->required();
  augment_cmd->add_option("--mask-seed", augment.mask_seed, "Mask placement seed");
  augment_cmd->add_option("--fill", augment.fill, "Fill value in [0,1] or 'mean'")->capture_default_str();
  augment_cmd->add_option("--depth-target", augment.depth_target, "Target depth estimate PFM");
  augment_cmd->add_option("--depth-source", augment.depth_source, "Source depth prediction PFM");
  augment_cmd->add_option("--intrinsics", augment.intrinsics, "Intrinsics JSON");
  augment_cmd->add_option("--pose", augment.pose, "Target-to-source pose JSON");

  NmfArgs nmf;
  auto* nmf_cmd = app.add_subcommand("nmf-seg", "NMF segmentation pseudo-labels");
  nmf_cmd->add_option("images", nmf.images, "Input PNGs (same size)")->required();
  nmf_cmd->add_option("--k", nmf.k, "Number of clusters")->capture_default_str();
  nmf_cmd->add_option("--iters", nmf.iters, "Maximum iterations")->capture_default_str();
  nmf_cmd->add_option("--tol", nmf.tol, "Relative error-change tolerance")->capture_default_str();
  nmf_cmd->add_option("--temperature", nmf.temperature, "Softmax temperature")->capture_default_str();
  nmf_cmd->add_flag("--probs", nmf.probs, "Also write per-class probability PFMs");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Depth metrics against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Predicted depth PFMs")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth depth PFMs")->required();
  eval_cmd->add_option("--cap", eval.cap, "Depth cap in mm (150 SCARED, 180 SERV-CT)")->capture_default_str();
  eval_cmd->add_flag("--no-median-scale", eval.no_median_scale, "Evaluate metric predictions as-is");
  eval_cmd->add_option("--threshold", eval.threshold, "Delta threshold")->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-toy", "Desk-scale training on a synthetic scene");
  train_cmd->add_option("--steps", train.steps, "Gradient steps");
  train_cmd->add_option("--lr", train.lr, "Learning rate");
  train_cmd->add_option("--da", train.da, "Occlusion-mask augmentation on/off");
  train_cmd->add_option("--ss", train.ss, "Semantic consistency on/off");
  train_cmd->add_option("--k", train.k, "NMF cluster count");
  train_cmd->add_option("--mask-seed", train.mask_seed, "Occlusion mask seed");

  GradArgs grad;
  auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference gradient checks");
  grad_cmd->add_option("--target", grad.target, "Target name or 'all'")->capture_default_str();
  grad_cmd->add_option("--instances", grad.instances, "Random instances")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth_cmd) run_synth(global, synth);
    if (*warp_cmd) run_warp(global, warp);
    if (*augment_cmd) run_augment(global, augment);
    if (*nmf_cmd) run_nmf_seg(global, nmf);
    if (*eval_cmd) run_eval(global, eval);
    if (*train_cmd) run_train(global, train);
    if (*grad_cmd && !run_grad_check(global, grad)) return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
