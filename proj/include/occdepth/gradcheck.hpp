#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace occdepth {

inline constexpr double kGradCheckTolerance = 1e-4;

/// Outcome of comparing an analytic gradient with central finite
/// differences over a seeded suite of random instances.
///
/// Per instance the error is max_i |analytic_i - numeric_i| divided by
/// max_i max(|analytic_i|, |numeric_i|); the report keeps the worst instance.
struct GradCheckReport {
  std::string target;
  int instances = 0;
  std::size_t entries_checked = 0;
  std::size_t entries_skipped = 0;  // lattice lines, validity flips
  double max_rel_error = 0.0;
  /// Gradients at mask-excluded pixels were exactly zero (masked targets only).
  bool masked_gradients_zero = true;
  bool passed = false;
};

/// Registered targets: sample_bilinear, photometric_loss, depth_loss,
/// smoothness_loss, smoothness_loss_normalized, semantic_consistency_loss,
/// warp_field, warp_pose, warp_sampler.
std::vector<std::string> grad_check_targets();

/// Throws DomainError for an unknown target name.
GradCheckReport grad_check(const std::string& target, std::uint64_t seed, int instances = 20);

}  // namespace occdepth
