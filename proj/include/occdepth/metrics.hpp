#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "occdepth/grid.hpp"

namespace occdepth {

/// Depth cap used for SCARED-style evaluation.
inline constexpr double kScaredDepthCapMm = 150.0;
/// Depth cap used for SERV-CT-style evaluation.
inline constexpr double kServCtDepthCapMm = 180.0;
/// Floor applied to predictions before evaluation.
inline constexpr double kMinEvalDepthMm = 1e-3;

struct MetricsRecord {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta = 0.0;  // fraction in [0, 1]
  std::size_t n_pixels = 0;
  double scale_ratio = 1.0;
};

struct MetricsOptions {
  double cap_mm = kScaredDepthCapMm;
  /// Rescale predictions by median(gt) / median(pred) over valid pixels.
  bool median_scale = true;
  double delta_threshold = 1.25;
};

/// Evaluates over pixels with 0 < gt <= cap. Throws EmptySupportError when
/// no such pixel exists. `eval_mask`, if given, further restricts support.
MetricsRecord compute_metrics(const DepthMap& pred, const DepthMap& gt,
                              const MetricsOptions& options = {},
                              const Mask* eval_mask = nullptr);

/// min(D, cap) with a floor of kMinEvalDepthMm.
DepthMap clamp_depth(const DepthMap& depth, double cap_mm);

/// Median with the two middle values averaged for even counts.
double median(std::vector<double> values);

/// Per-column mean of a batch; n_pixels is the batch total.
MetricsRecord mean_record(const std::vector<MetricsRecord>& records);

struct FrameMetrics {
  std::string frame;
  MetricsRecord record;
};

/// Header, one row per frame, then a `mean` row.
void write_metrics_csv(std::ostream& out, const std::vector<FrameMetrics>& frames);

}  // namespace occdepth
