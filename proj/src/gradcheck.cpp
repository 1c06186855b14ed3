#include "occdepth/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "occdepth/errors.hpp"
#include "occdepth/geometry.hpp"
#include "occdepth/losses.hpp"
#include "occdepth/sampler.hpp"

namespace occdepth {
namespace {

constexpr double kRelativeStep = 1e-4;
constexpr double kLatticeMargin = 1e-3;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Grid random_grid(Rng& rng, int h, int w, int c, double lo, double hi) {
  Grid g(h, w, c);
  for (double& v : g.data()) v = uniform(rng, lo, hi);
  return g;
}

Mask random_mask(Rng& rng, int h, int w, double p) {
  Mask m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, uniform(rng, 0.0, 1.0) < p);
  if (m.count() == 0) m.set(0, true);
  return m;
}

double step_for(double x) { return kRelativeStep * std::max(std::abs(x), 1e-2); }

bool near_lattice(double t) {
  const double frac = t - std::floor(t);
  return std::min(frac, 1.0 - frac) < kLatticeMargin;
}

/// Running comparison for one instance.
struct Comparison {
  double max_diff = 0.0;
  double max_scale = 0.0;
  std::size_t checked = 0;

  void add(double analytic, double numeric) {
    max_diff = std::max(max_diff, std::abs(analytic - numeric));
    max_scale = std::max({max_scale, std::abs(analytic), std::abs(numeric)});
    ++checked;
  }
  double relative() const { return max_scale > 0.0 ? max_diff / max_scale : max_diff; }
};

/// Central difference of f with respect to x[i], restoring x afterwards.
double central_difference(Grid& x, std::size_t i, const std::function<double()>& f) {
  const double original = x[i];
  const double h = step_for(original);
  x[i] = original + h;
  const double plus = f();
  x[i] = original - h;
  const double minus = f();
  x[i] = original;
  return (plus - minus) / (2.0 * h);
}

void record(GradCheckReport& report, const Comparison& cmp) {
  report.max_rel_error = std::max(report.max_rel_error, cmp.relative());
  report.entries_checked += cmp.checked;
  ++report.instances;
}

// Random sampling coordinates at least kLatticeMargin from lattice lines.
Grid lattice_free_coords(Rng& rng, int h, int w, int grid_h, int grid_w) {
  Grid coords(h, w, 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double u;
      double v;
      do {
        u = uniform(rng, 0.0, grid_w - 1);
      } while (near_lattice(u));
      do {
        v = uniform(rng, 0.0, grid_h - 1);
      } while (near_lattice(v));
      coords(y, x, 0) = u;
      coords(y, x, 1) = v;
    }
  }
  return coords;
}

double dot(const Grid& a, const Grid& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_sample_bilinear(Rng& rng, GradCheckReport& report) {
  Grid grid = random_grid(rng, 8, 8, 2, 0.0, 1.0);
  Grid coords = lattice_free_coords(rng, 6, 6, 8, 8);
  const Grid upstream = random_grid(rng, 6, 6, 2, -1.0, 1.0);
  const auto loss = [&] { return dot(upstream, sample_bilinear(grid, coords).values); };
  const BilinearGradients g = sample_bilinear_grad(grid, coords, upstream);
  Comparison cmp;
  for (std::size_t i = 0; i < grid.size(); ++i) cmp.add(g.grid[i], central_difference(grid, i, loss));
  for (std::size_t i = 0; i < coords.size(); ++i) {
    cmp.add(g.coords[i], central_difference(coords, i, loss));
  }
  record(report, cmp);
}

void check_photometric(Rng& rng, GradCheckReport& report) {
  const Image target = random_grid(rng, 8, 8, 3, 0.0, 1.0);
  SampledGrid recon{random_grid(rng, 8, 8, 3, 0.0, 1.0), random_mask(rng, 8, 8, 0.7)};
  const LossValue lv = photometric_loss(target, recon);
  const Grid& g = lv.grad("recon");
  const auto loss = [&] { return photometric_loss(target, recon).value; };
  Comparison cmp;
  for (std::size_t i = 0; i < recon.values.size(); ++i) {
    const std::size_t pixel = i / 3;
    if (!recon.valid[pixel]) {
      if (g[i] != 0.0) report.masked_gradients_zero = false;
      continue;
    }
    cmp.add(g[i], central_difference(recon.values, i, loss));
  }
  record(report, cmp);
}

void check_depth_loss(Rng& rng, GradCheckReport& report) {
  Grid target = random_grid(rng, 8, 8, 1, 1.0, 100.0);
  Grid source = random_grid(rng, 8, 8, 1, 1.0, 100.0);
  const Mask mask = random_mask(rng, 8, 8, 0.5);
  const LossValue lv = depth_loss(target, source, mask);
  const auto loss = [&] { return depth_loss(target, source, mask).value; };
  Comparison cmp;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!mask[i]) {
      if (lv.grad("depth_target")[i] != 0.0 || lv.grad("depth_source")[i] != 0.0) {
        report.masked_gradients_zero = false;
      }
      continue;
    }
    cmp.add(lv.grad("depth_target")[i], central_difference(target, i, loss));
    cmp.add(lv.grad("depth_source")[i], central_difference(source, i, loss));
  }
  record(report, cmp);
}

void check_smoothness(Rng& rng, GradCheckReport& report, bool normalized) {
  Grid depth = random_grid(rng, 8, 8, 1, 1.0, 100.0);
  const Image image = random_grid(rng, 8, 8, 3, 0.0, 1.0);
  SmoothnessOptions options;
  options.normalize_depth = normalized;
  const LossValue lv = smoothness_loss(depth, image, options);
  const auto loss = [&] { return smoothness_loss(depth, image, options).value; };
  Comparison cmp;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    cmp.add(lv.grad("depth")[i], central_difference(depth, i, loss));
  }
  record(report, cmp);
}

Grid random_probabilities(Rng& rng, int h, int w, int k) {
  Grid g = random_grid(rng, h, w, k, 0.05, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double total = 0.0;
      for (int c = 0; c < k; ++c) total += g(y, x, c);
      for (int c = 0; c < k; ++c) g(y, x, c) /= total;
    }
  }
  return g;
}

void check_semantic(Rng& rng, GradCheckReport& report) {
  const SegmentationMap target = random_probabilities(rng, 8, 8, 4);
  SegmentationMap prev = random_probabilities(rng, 8, 8, 4);
  SegmentationMap next = random_probabilities(rng, 8, 8, 4);
  const Mask mask_prev = random_mask(rng, 8, 8, 0.7);
  const Mask mask_next = random_mask(rng, 8, 8, 0.7);
  const LossValue lv = semantic_consistency_loss(target, prev, next, mask_prev, mask_next);
  const auto loss = [&] {
    return semantic_consistency_loss(target, prev, next, mask_prev, mask_next).value;
  };
  Comparison cmp;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const std::size_t pixel = i / 4;
    if (!mask_prev[pixel] && lv.grad("warped_prev")[i] != 0.0) report.masked_gradients_zero = false;
    if (!mask_next[pixel] && lv.grad("warped_next")[i] != 0.0) report.masked_gradients_zero = false;
    if (mask_prev[pixel]) cmp.add(lv.grad("warped_prev")[i], central_difference(prev, i, loss));
    if (mask_next[pixel]) cmp.add(lv.grad("warped_next")[i], central_difference(next, i, loss));
  }
  record(report, cmp);
}

CameraIntrinsics small_intrinsics() { return {8.0, 8.0, 3.5, 3.5, 8, 8}; }

PoseSE3 random_small_pose(Rng& rng) {
  const Eigen::Vector3d aa(uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05),
                           uniform(rng, -0.05, 0.05));
  const Eigen::Vector3d t(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0),
                          uniform(rng, -3.0, 3.0));
  return PoseSE3::from_axis_angle(aa, t);
}

void check_warp_field(Rng& rng, GradCheckReport& report) {
  const CameraIntrinsics k = small_intrinsics();
  Grid depth = random_grid(rng, 8, 8, 1, 20.0, 80.0);
  const PoseSE3 pose = random_small_pose(rng);
  const WarpField warp = warp_field(depth, k, pose);
  Comparison cmp;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const int y = static_cast<int>(i) / 8;
    const int x = static_cast<int>(i) % 8;
    for (int q = 0; q < 3; ++q) {
      const auto f = [&] {
        const WarpField wf = warp_field(depth, k, pose);
        return q < 2 ? wf.coords(y, x, q) : wf.src_depth(y, x);
      };
      const double analytic = q < 2 ? warp.dcoords_ddepth(y, x, q) : warp.dsrc_depth_ddepth(y, x);
      cmp.add(analytic, central_difference(depth, i, f));
    }
  }
  record(report, cmp);
}

void check_warp_pose(Rng& rng, GradCheckReport& report) {
  const CameraIntrinsics k = small_intrinsics();
  const Grid depth = random_grid(rng, 8, 8, 1, 20.0, 80.0);
  Eigen::Vector3d aa(uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1));
  Eigen::Vector3d t(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));
  const auto jac = warp_pose_jacobian(depth, k, aa, t);
  const WarpField base = warp_field(depth, k, PoseSE3::from_axis_angle(aa, t));
  Comparison cmp;
  for (int param = 0; param < 6; ++param) {
    double& slot = param < 3 ? aa(param) : t(param - 3);
    const double original = slot;
    const double h = step_for(original);
    slot = original + h;
    const WarpField plus = warp_field(depth, k, PoseSE3::from_axis_angle(aa, t));
    slot = original - h;
    const WarpField minus = warp_field(depth, k, PoseSE3::from_axis_angle(aa, t));
    slot = original;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (!base.valid(y, x) || !plus.valid(y, x) || !minus.valid(y, x)) {
          ++report.entries_skipped;
          continue;
        }
        const auto& j = jac[static_cast<std::size_t>(y) * 8 + x];
        for (int q = 0; q < 2; ++q) {
          cmp.add(j(q, param), (plus.coords(y, x, q) - minus.coords(y, x, q)) / (2.0 * h));
        }
        cmp.add(j(2, param), (plus.src_depth(y, x) - minus.src_depth(y, x)) / (2.0 * h));
      }
    }
  }
  record(report, cmp);
}

// d/dD of sum(upstream * synthesize_view(source, warp_field(D))).
void check_warp_sampler(Rng& rng, GradCheckReport& report) {
  const CameraIntrinsics k = small_intrinsics();
  Grid depth = random_grid(rng, 8, 8, 1, 20.0, 80.0);
  const Image source = random_grid(rng, 8, 8, 3, 0.0, 1.0);
  const Grid upstream = random_grid(rng, 8, 8, 3, -1.0, 1.0);
  const PoseSE3 pose = random_small_pose(rng);

  const WarpField warp = warp_field(depth, k, pose);
  const SampledGrid recon = synthesize_view(source, warp);
  Grid masked_upstream = upstream;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      if (recon.valid(y, x)) continue;
      for (int c = 0; c < 3; ++c) masked_upstream(y, x, c) = 0.0;
    }
  }
  const BilinearGradients back = sample_bilinear_grad(source, warp.coords, masked_upstream);
  const auto loss = [&] { return dot(upstream, synthesize_view(source, warp_field(depth, k, pose)).values); };

  Comparison cmp;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const std::size_t i = depth.index(y, x);
      const double h = step_for(depth[i]);
      const double du = std::abs(warp.dcoords_ddepth(y, x, 0)) * h;
      const double dv = std::abs(warp.dcoords_ddepth(y, x, 1)) * h;
      const double u = warp.coords(y, x, 0);
      const double v = warp.coords(y, x, 1);
      // Skip pixels whose perturbation crosses a lattice line or the border.
      const bool crosses = std::floor(u - du - kLatticeMargin) != std::floor(u + du + kLatticeMargin) ||
                           std::floor(v - dv - kLatticeMargin) != std::floor(v + dv + kLatticeMargin);
      const bool border = u - du - kLatticeMargin < 0.0 || u + du + kLatticeMargin > 7.0 ||
                          v - dv - kLatticeMargin < 0.0 || v + dv + kLatticeMargin > 7.0;
      if (!recon.valid(y, x) || crosses || border) {
        ++report.entries_skipped;
        continue;
      }
      const double analytic = back.coords(y, x, 0) * warp.dcoords_ddepth(y, x, 0) +
                              back.coords(y, x, 1) * warp.dcoords_ddepth(y, x, 1);
      cmp.add(analytic, central_difference(depth, i, loss));
    }
  }
  record(report, cmp);
}

using Checker = std::function<void(Rng&, GradCheckReport&)>;

const std::map<std::string, Checker>& registry() {
  static const std::map<std::string, Checker> targets{
      {"sample_bilinear", check_sample_bilinear},
      {"photometric_loss", check_photometric},
      {"depth_loss", check_depth_loss},
      {"smoothness_loss", [](Rng& r, GradCheckReport& g) { check_smoothness(r, g, false); }},
      {"smoothness_loss_normalized",
       [](Rng& r, GradCheckReport& g) { check_smoothness(r, g, true); }},
      {"semantic_consistency_loss", check_semantic},
      {"warp_field", check_warp_field},
      {"warp_pose", check_warp_pose},
      {"warp_sampler", check_warp_sampler},
  };
  return targets;
}

}  // namespace

std::vector<std::string> grad_check_targets() {
  std::vector<std::string> names;
  for (const auto& [name, checker] : registry()) names.push_back(name);
  return names;
}

GradCheckReport grad_check(const std::string& target, std::uint64_t seed, int instances) {
  const auto it = registry().find(target);
  if (it == registry().end()) throw DomainError("grad_check: unknown target '" + target + "'");
  if (instances < 1) throw DomainError("grad_check: instances must be >= 1");
  GradCheckReport report;
  report.target = target;
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) it->second(rng, report);
  report.passed = report.max_rel_error < kGradCheckTolerance && report.masked_gradients_zero;
  return report;
}

}  // namespace occdepth
