#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "occdepth/geometry.hpp"
#include "occdepth/grid.hpp"

namespace occdepth {

/// Solid (3D) procedural texture: three seeded sinusoidal octaves mapped
/// into [0.2, 0.8]. Being defined on space rather than on surface
/// parameters, it has no seams on any surface.
struct Texture {
  struct Octave {
    Eigen::Vector3d direction;  // unit
    double period_mm = 0.0;
    double phase = 0.0;
    double amplitude = 0.0;  // amplitudes sum to 1
  };

  std::uint64_t seed = 0;
  double base_period_mm = 32.0;
  /// 1 for full contrast; weak_texture() uses 0.1.
  double contrast = 1.0;
  std::array<Octave, 3> octaves{};

  static Texture seeded(std::uint64_t seed, double base_period_mm = 32.0,
                        double contrast = 1.0);
  static constexpr double kWeakContrast = 0.1;

  double evaluate(const Eigen::Vector3d& point) const;
};

enum class SceneKind { plane, tube };

/// Surfaces are expressed in world coordinates; the reference camera is the
/// world frame looking down +Z.
struct Scene {
  SceneKind kind = SceneKind::plane;
  // plane: {x : normal . x = offset}
  Eigen::Vector3d plane_normal = Eigen::Vector3d::UnitZ();
  double plane_offset = 50.0;
  // tube: cylinder of `tube_radius` around the line through `tube_point`
  Eigen::Vector3d tube_point = Eigen::Vector3d::Zero();
  Eigen::Vector3d tube_axis = Eigen::Vector3d::UnitZ();
  double tube_radius = 20.0;
  Texture texture = Texture::seeded(0);

  static Scene plane(const Eigen::Vector3d& normal, double offset, const Texture& texture);
  static Scene tube(const Eigen::Vector3d& point, const Eigen::Vector3d& axis, double radius,
                    const Texture& texture);

  /// Throws DomainError on a non-positive plane offset or tube radius.
  void validate() const;

  /// Distance along the ray origin + t * direction to the nearest surface
  /// hit with t > 0, or a negative value on a miss.
  double intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction) const;
};

struct RenderedView {
  Image image;  // H x W x 3
  DepthMap depth;
};

/// Exact ray-cast render. Throws SceneCoverageError if any pixel ray misses
/// the surface.
RenderedView render_view(const Scene& scene, const CameraIntrinsics& intrinsics,
                         const PoseSE3& world_to_camera);

struct ViewPair {
  Image target_image;
  DepthMap target_depth;
  Image source_image;
  DepthMap source_depth;
  PoseSE3 target_to_source;
};

ViewPair make_pair(const Scene& scene, const CameraIntrinsics& intrinsics,
                   const PoseSE3& world_to_target, const PoseSE3& world_to_source);

/// Relative transform taking target-camera points into the source camera.
PoseSE3 relative_pose(const PoseSE3& world_to_target, const PoseSE3& world_to_source);

}  // namespace occdepth
