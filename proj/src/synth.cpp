#include "occdepth/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "occdepth/errors.hpp"

namespace occdepth {

Texture Texture::seeded(std::uint64_t seed, double base_period_mm, double contrast) {
  if (!(base_period_mm > 0.0)) throw DomainError("texture period must be positive");
  if (!(contrast >= 0.0 && contrast <= 1.0)) throw DomainError("texture contrast must lie in [0, 1]");
  Texture texture;
  texture.seed = seed;
  texture.base_period_mm = base_period_mm;
  texture.contrast = contrast;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  constexpr std::array<double, 3> kAmplitudes{0.5, 0.3, 0.2};
  for (std::size_t o = 0; o < texture.octaves.size(); ++o) {
    Octave& octave = texture.octaves[o];
    Eigen::Vector3d dir(normal(rng), normal(rng), normal(rng));
    octave.direction = dir.normalized();
    octave.period_mm = base_period_mm / static_cast<double>(1u << o);
    octave.phase = 2.0 * std::numbers::pi * uniform(rng);
    octave.amplitude = kAmplitudes[o];
  }
  return texture;
}

double Texture::evaluate(const Eigen::Vector3d& point) const {
  double signal = 0.0;
  for (const Octave& octave : octaves) {
    signal += octave.amplitude *
              std::sin(2.0 * std::numbers::pi * octave.direction.dot(point) / octave.period_mm +
                       octave.phase);
  }
  return 0.5 + 0.3 * contrast * signal;
}

Scene Scene::plane(const Eigen::Vector3d& normal, double offset, const Texture& texture) {
  Scene scene;
  scene.kind = SceneKind::plane;
  scene.plane_normal = normal.normalized();
  scene.plane_offset = offset;
  scene.texture = texture;
  scene.validate();
  return scene;
}

Scene Scene::tube(const Eigen::Vector3d& point, const Eigen::Vector3d& axis, double radius,
                  const Texture& texture) {
  Scene scene;
  scene.kind = SceneKind::tube;
  scene.tube_point = point;
  scene.tube_axis = axis.normalized();
  scene.tube_radius = radius;
  scene.texture = texture;
  scene.validate();
  return scene;
}

void Scene::validate() const {
  switch (kind) {
    case SceneKind::plane:
      if (!(std::abs(plane_normal.norm() - 1.0) < 1e-9)) throw DomainError("plane normal must be unit");
      if (!(plane_offset > 0.0)) throw DomainError("plane offset must be positive");
      break;
    case SceneKind::tube:
      if (!(std::abs(tube_axis.norm() - 1.0) < 1e-9)) throw DomainError("tube axis must be unit");
      if (!(tube_radius > 0.0)) throw DomainError("tube radius must be positive");
      break;
  }
}

double Scene::intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction) const {
  if (kind == SceneKind::plane) {
    const double denom = plane_normal.dot(direction);
    if (std::abs(denom) < 1e-15) return -1.0;
    return (plane_offset - plane_normal.dot(origin)) / denom;
  }
  // |q + t e|^2 = r^2 with q, e the components perpendicular to the axis.
  const Eigen::Vector3d rel = origin - tube_point;
  const Eigen::Vector3d q = rel - rel.dot(tube_axis) * tube_axis;
  const Eigen::Vector3d e = direction - direction.dot(tube_axis) * tube_axis;
  const double a = e.squaredNorm();
  if (a < 1e-15) return -1.0;
  const double b = q.dot(e);
  const double c = q.squaredNorm() - tube_radius * tube_radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return -1.0;
  const double root = std::sqrt(disc);
  const double near = (-b - root) / a;
  if (near > 0.0) return near;
  return (-b + root) / a;
}

RenderedView render_view(const Scene& scene, const CameraIntrinsics& intrinsics,
                         const PoseSE3& world_to_camera) {
  intrinsics.validate();
  scene.validate();
  const int h = intrinsics.height;
  const int w = intrinsics.width;
  const PoseSE3 camera_to_world = pose_inverse(world_to_camera);
  const Eigen::Vector3d center = camera_to_world.translation;
  RenderedView out{Image(h, w, 3), DepthMap(h, w, 1)};
  // Tissue-like tint per channel.
  constexpr std::array<double, 3> kTint{1.0, 0.75, 0.6};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Camera-frame ray with unit Z, so the hit distance is the depth.
      const Eigen::Vector3d ray((x - intrinsics.cx) / intrinsics.fx,
                                (y - intrinsics.cy) / intrinsics.fy, 1.0);
      const Eigen::Vector3d dir = camera_to_world.rotation * ray;
      const double t = scene.intersect(center, dir);
      if (!(t > kBehindCameraEpsilon) || !std::isfinite(t)) {
        throw SceneCoverageError("pixel (" + std::to_string(y) + ", " + std::to_string(x) +
                                 ") misses the surface");
      }
      out.depth(y, x) = t;
      const double value = scene.texture.evaluate(center + t * dir);
      for (int c = 0; c < 3; ++c) out.image(y, x, c) = value * kTint[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

PoseSE3 relative_pose(const PoseSE3& world_to_target, const PoseSE3& world_to_source) {
  return pose_compose(world_to_source, pose_inverse(world_to_target));
}

ViewPair make_pair(const Scene& scene, const CameraIntrinsics& intrinsics,
                   const PoseSE3& world_to_target, const PoseSE3& world_to_source) {
  RenderedView target = render_view(scene, intrinsics, world_to_target);
  RenderedView source = render_view(scene, intrinsics, world_to_source);
  return {std::move(target.image), std::move(target.depth), std::move(source.image),
          std::move(source.depth), relative_pose(world_to_target, world_to_source)};
}

}  // namespace occdepth
