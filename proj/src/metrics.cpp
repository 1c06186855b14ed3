#include "occdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "occdepth/errors.hpp"

namespace occdepth {

double median(std::vector<double> values) {
  if (values.empty()) throw EmptySupportError("median of no values");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

DepthMap clamp_depth(const DepthMap& depth, double cap_mm) {
  if (!(cap_mm > 0.0)) throw DomainError("clamp_depth: cap must be positive");
  DepthMap out = depth;
  for (double& d : out.data()) d = std::clamp(d, kMinEvalDepthMm, cap_mm);
  return out;
}

MetricsRecord compute_metrics(const DepthMap& pred, const DepthMap& gt,
                              const MetricsOptions& options, const Mask* eval_mask) {
  require_same_shape(pred, gt, "compute_metrics");
  if (eval_mask != nullptr) require_same_spatial(gt, *eval_mask, "compute_metrics");
  if (!(options.cap_mm > 0.0)) throw DomainError("compute_metrics: cap must be positive");
  if (!(options.delta_threshold > 0.0)) {
    throw DomainError("compute_metrics: delta threshold must be positive");
  }

  std::vector<double> gt_values;
  std::vector<double> pred_values;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (eval_mask != nullptr && !(*eval_mask)[i / static_cast<std::size_t>(gt.channels())]) {
      continue;
    }
    if (gt[i] > 0.0 && gt[i] <= options.cap_mm && std::isfinite(pred[i])) {
      gt_values.push_back(gt[i]);
      pred_values.push_back(pred[i]);
    }
  }
  if (gt_values.empty()) throw EmptySupportError("compute_metrics has no valid ground truth");

  MetricsRecord out;
  out.n_pixels = gt_values.size();
  if (options.median_scale) {
    const double pred_median = median(pred_values);
    if (!(pred_median > 0.0)) throw DomainError("compute_metrics: median prediction is not positive");
    out.scale_ratio = median(gt_values) / pred_median;
  }

  std::size_t within = 0;
  for (std::size_t i = 0; i < gt_values.size(); ++i) {
    const double truth = gt_values[i];
    const double d = std::clamp(pred_values[i] * out.scale_ratio, kMinEvalDepthMm, options.cap_mm);
    const double err = std::abs(truth - d);
    out.abs_rel += err / truth;
    out.sq_rel += err * err / truth;
    out.rmse += err * err;
    const double log_err = std::log(truth) - std::log(d);
    out.rmse_log += log_err * log_err;
    if (std::max(truth / d, d / truth) < options.delta_threshold) ++within;
  }
  const double n = static_cast<double>(out.n_pixels);
  out.abs_rel /= n;
  out.sq_rel /= n;
  out.rmse = std::sqrt(out.rmse / n);
  out.rmse_log = std::sqrt(out.rmse_log / n);
  out.delta = static_cast<double>(within) / n;
  return out;
}

MetricsRecord mean_record(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw EmptySupportError("mean_record of no records");
  MetricsRecord out;
  out.scale_ratio = 0.0;
  for (const MetricsRecord& r : records) {
    out.abs_rel += r.abs_rel;
    out.sq_rel += r.sq_rel;
    out.rmse += r.rmse;
    out.rmse_log += r.rmse_log;
    out.delta += r.delta;
    out.scale_ratio += r.scale_ratio;
    out.n_pixels += r.n_pixels;
  }
  const double n = static_cast<double>(records.size());
  out.abs_rel /= n;
  out.sq_rel /= n;
  out.rmse /= n;
  out.rmse_log /= n;
  out.delta /= n;
  out.scale_ratio /= n;
  return out;
}

namespace {

void write_row(std::ostream& out, const std::string& frame, const MetricsRecord& r) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu\n",
                frame.c_str(), r.abs_rel, r.sq_rel, r.rmse, r.rmse_log, r.delta,
                r.scale_ratio, r.n_pixels);
  out << buffer;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<FrameMetrics>& frames) {
  out << "frame,abs_rel,sq_rel,rmse,rmse_log,delta,scale_ratio,n_pixels\n";
  std::vector<MetricsRecord> records;
  for (const FrameMetrics& f : frames) {
    write_row(out, f.frame, f.record);
    records.push_back(f.record);
  }
  if (!records.empty()) write_row(out, "mean", mean_record(records));
}

}  // namespace occdepth
