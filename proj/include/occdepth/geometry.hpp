#pragma once

#include <vector>

#include <Eigen/Core>

#include "occdepth/grid.hpp"

namespace occdepth {

/// Projections with camera-frame Z at or below this are behind the camera.
inline constexpr double kBehindCameraEpsilon = 1e-6;

/// Pinhole intrinsics. Integer pixel coordinates address pixel centers, so
/// the image spans [0, width - 1] x [0, height - 1].
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws DomainError unless fx, fy > 0 and the principal point is in the image.
  void validate() const;
  Eigen::Matrix3d matrix() const;

  /// 64 x 64, fx = fy = 64, cx = cy = 31.5.
  static CameraIntrinsics desk_default();
};

/// Rigid transform x' = rotation * x + translation (millimeters).
struct PoseSE3 {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static PoseSE3 identity() { return {}; }
  static PoseSE3 from_translation(const Eigen::Vector3d& t);
  /// Rodrigues exponential of an axis-angle vector (radians) plus translation.
  static PoseSE3 from_axis_angle(const Eigen::Vector3d& axis_angle,
                                 const Eigen::Vector3d& t);
  /// Accepts a homogeneous 4x4 matrix; throws DomainError if it is not rigid.
  static PoseSE3 from_matrix(const Eigen::Matrix4d& m);

  Eigen::Matrix4d matrix() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& point) const {
    return rotation * point + translation;
  }
  /// Orthonormality and unit determinant within 1e-9.
  void validate() const;
};

/// Applies b first, then a.
PoseSE3 pose_compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 pose_inverse(const PoseSE3& a);

/// depth * K^-1 * (u, v, 1). Throws DomainError for depth <= 0.
Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double depth,
                            const CameraIntrinsics& intrinsics);

struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 0.0;
  bool valid = false;
};

/// Pixel values are unspecified when valid is false.
Projection project(const Eigen::Vector3d& point, const CameraIntrinsics& intrinsics);

/// Where each target pixel lands in the source frame, with derivatives of
/// those quantities with respect to that pixel's target depth.
struct WarpField {
  Grid coords;           // H x W x 2, source (u, v)
  Grid src_depth;        // H x W x 1, camera-frame Z in the source frame
  Mask valid;            // projection in front of camera and inside the image
  Grid dcoords_ddepth;   // H x W x 2
  Grid dsrc_depth_ddepth;  // H x W x 1

  int height() const { return coords.height(); }
  int width() const { return coords.width(); }
};

/// Inverse warp of the target frame into the source frame. The depth map
/// must be strictly positive and sized to match the intrinsics.
WarpField warp_field(const DepthMap& depth_target, const CameraIntrinsics& intrinsics,
                     const PoseSE3& target_to_source);

/// Warp field whose coordinates are exactly the pixel grid, all valid.
WarpField identity_warp(int height, int width);

/// dR/d(axis_angle_i) for the Rodrigues map, i in {0, 1, 2}.
Eigen::Matrix3d rotation_derivative(const Eigen::Vector3d& axis_angle, int i);

using WarpPoseJacobian = Eigen::Matrix<double, 3, 6>;

/// Per-pixel d(u, v, src_depth) / d(axis_angle, translation), row-major over
/// pixels. Entries for invalid pixels are zero.
std::vector<WarpPoseJacobian> warp_pose_jacobian(const DepthMap& depth_target,
                                                 const CameraIntrinsics& intrinsics,
                                                 const Eigen::Vector3d& axis_angle,
                                                 const Eigen::Vector3d& translation);

}  // namespace occdepth
