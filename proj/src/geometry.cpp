#include "occdepth/geometry.hpp"

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "occdepth/errors.hpp"

namespace occdepth {
namespace {

constexpr double kRigidTolerance = 1e-9;

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

bool in_image(const Eigen::Vector2d& p, int width, int height) {
  return p.x() >= 0.0 && p.x() <= width - 1 && p.y() >= 0.0 && p.y() <= height - 1;
}

// Rounding in backproject/project can land a border pixel a few ulps outside
// the image; pull such coordinates back onto the border.
constexpr double kBorderSnap = 1e-9;

double snap_to_range(double v, double hi) {
  if (v < 0.0 && v > -kBorderSnap) return 0.0;
  if (v > hi && v < hi + kBorderSnap) return hi;
  return v;
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw DomainError("intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw DomainError("intrinsics: image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw DomainError("intrinsics: principal point outside the image");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics CameraIntrinsics::desk_default() {
  return {64.0, 64.0, 31.5, 31.5, 64, 64};
}

PoseSE3 PoseSE3::from_translation(const Eigen::Vector3d& t) {
  PoseSE3 pose;
  pose.translation = t;
  return pose;
}

PoseSE3 PoseSE3::from_axis_angle(const Eigen::Vector3d& axis_angle,
                                 const Eigen::Vector3d& t) {
  PoseSE3 pose;
  const double angle = axis_angle.norm();
  if (angle > 0.0) {
    pose.rotation = Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
  }
  pose.translation = t;
  return pose;
}

PoseSE3 PoseSE3::from_matrix(const Eigen::Matrix4d& m) {
  const Eigen::RowVector4d bottom = m.row(3);
  if ((bottom - Eigen::RowVector4d(0.0, 0.0, 0.0, 1.0)).cwiseAbs().maxCoeff() >
      kRigidTolerance) {
    throw DomainError("pose: bottom row must be 0 0 0 1");
  }
  PoseSE3 pose;
  pose.rotation = m.topLeftCorner<3, 3>();
  pose.translation = m.topRightCorner<3, 1>();
  pose.validate();
  return pose;
}

Eigen::Matrix4d PoseSE3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

void PoseSE3::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw DomainError("pose: non-finite entries");
  }
  const double ortho =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kRigidTolerance) {
    throw DomainError("pose: rotation is not orthonormal (defect " + std::to_string(ortho) +
                      ")");
  }
  if (std::abs(rotation.determinant() - 1.0) > kRigidTolerance) {
    throw DomainError("pose: rotation determinant is not 1");
  }
}

PoseSE3 pose_compose(const PoseSE3& a, const PoseSE3& b) {
  PoseSE3 out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

PoseSE3 pose_inverse(const PoseSE3& a) {
  PoseSE3 out;
  out.rotation = a.rotation.transpose();
  out.translation = -(out.rotation * a.translation);
  return out;
}

Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double depth,
                            const CameraIntrinsics& intrinsics) {
  if (!(depth > 0.0)) {
    throw DomainError("backproject: depth must be positive, got " + std::to_string(depth));
  }
  return {depth * (pixel.x() - intrinsics.cx) / intrinsics.fx,
          depth * (pixel.y() - intrinsics.cy) / intrinsics.fy, depth};
}

Projection project(const Eigen::Vector3d& point, const CameraIntrinsics& intrinsics) {
  Projection out;
  out.depth = point.z();
  out.valid = point.z() > kBehindCameraEpsilon;
  if (out.valid) {
    out.pixel = {intrinsics.fx * point.x() / point.z() + intrinsics.cx,
                 intrinsics.fy * point.y() / point.z() + intrinsics.cy};
  }
  return out;
}

WarpField warp_field(const DepthMap& depth_target, const CameraIntrinsics& intrinsics,
                     const PoseSE3& target_to_source) {
  intrinsics.validate();
  if (depth_target.height() != intrinsics.height ||
      depth_target.width() != intrinsics.width || depth_target.channels() != 1) {
    throw ShapeError("warp_field: depth map " + depth_target.shape_string() +
                     " does not match intrinsics " + std::to_string(intrinsics.height) +
                     "x" + std::to_string(intrinsics.width));
  }
  const int h = depth_target.height();
  const int w = depth_target.width();
  WarpField out{Grid(h, w, 2, -1.0), Grid(h, w, 1), Mask(h, w), Grid(h, w, 2),
                Grid(h, w, 1)};
  const Eigen::Matrix3d& rot = target_to_source.rotation;
  const Eigen::Vector3d& t = target_to_source.translation;
  const double fx = intrinsics.fx;
  const double fy = intrinsics.fy;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth_target(y, x);
      if (!(d > 0.0)) {
        throw DomainError("warp_field: non-positive depth at (" + std::to_string(y) + ", " +
                          std::to_string(x) + ")");
      }
      const Eigen::Vector3d ray((x - intrinsics.cx) / fx, (y - intrinsics.cy) / fy, 1.0);
      const Eigen::Vector3d rotated_ray = rot * ray;
      const Eigen::Vector3d p = d * rotated_ray + t;
      out.src_depth(y, x) = p.z();
      out.dsrc_depth_ddepth(y, x) = rotated_ray.z();
      const Projection proj = project(p, intrinsics);
      if (!proj.valid) continue;
      const Eigen::Vector2d pixel(snap_to_range(proj.pixel.x(), w - 1),
                                  snap_to_range(proj.pixel.y(), h - 1));
      out.coords(y, x, 0) = pixel.x();
      out.coords(y, x, 1) = pixel.y();
      const double inv_z = 1.0 / p.z();
      // d(fx X / Z)/dd = fx (X' Z - X Z') / Z^2 with X' = rotated_ray.
      out.dcoords_ddepth(y, x, 0) =
          fx * (rotated_ray.x() * p.z() - p.x() * rotated_ray.z()) * inv_z * inv_z;
      out.dcoords_ddepth(y, x, 1) =
          fy * (rotated_ray.y() * p.z() - p.y() * rotated_ray.z()) * inv_z * inv_z;
      out.valid.set(y, x, in_image(pixel, w, h));
    }
  }
  return out;
}

WarpField identity_warp(int height, int width) {
  WarpField out{Grid(height, width, 2), Grid(height, width, 1, 1.0),
                Mask(height, width, true), Grid(height, width, 2),
                Grid(height, width, 1, 1.0)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.coords(y, x, 0) = x;
      out.coords(y, x, 1) = y;
    }
  }
  return out;
}

Eigen::Matrix3d rotation_derivative(const Eigen::Vector3d& axis_angle, int i) {
  const Eigen::Vector3d e = Eigen::Vector3d::Unit(i);
  const double theta_sq = axis_angle.squaredNorm();
  if (theta_sq < 1e-16) return skew(e);
  const Eigen::Matrix3d rot = PoseSE3::from_axis_angle(axis_angle, Eigen::Vector3d::Zero()).rotation;
  const Eigen::Vector3d col = axis_angle.cross((Eigen::Matrix3d::Identity() - rot) * e);
  return (axis_angle(i) * skew(axis_angle) + skew(col)) / theta_sq * rot;
}

std::vector<WarpPoseJacobian> warp_pose_jacobian(const DepthMap& depth_target,
                                                 const CameraIntrinsics& intrinsics,
                                                 const Eigen::Vector3d& axis_angle,
                                                 const Eigen::Vector3d& translation) {
  const PoseSE3 pose = PoseSE3::from_axis_angle(axis_angle, translation);
  const WarpField warp = warp_field(depth_target, intrinsics, pose);
  std::array<Eigen::Matrix3d, 3> d_rot;
  for (int i = 0; i < 3; ++i) d_rot[i] = rotation_derivative(axis_angle, i);

  const int h = depth_target.height();
  const int w = depth_target.width();
  std::vector<WarpPoseJacobian> out(static_cast<std::size_t>(h) * w,
                                    WarpPoseJacobian::Zero());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!warp.valid(y, x)) continue;
      const Eigen::Vector3d target_point =
          backproject(Eigen::Vector2d(x, y), depth_target(y, x), intrinsics);
      const Eigen::Vector3d p = pose.apply(target_point);
      const double inv_z = 1.0 / p.z();
      // d(u, v, Z) / d(X, Y, Z)
      Eigen::Matrix3d d_proj;
      d_proj << intrinsics.fx * inv_z, 0.0, -intrinsics.fx * p.x() * inv_z * inv_z,
                0.0, intrinsics.fy * inv_z, -intrinsics.fy * p.y() * inv_z * inv_z,
                0.0, 0.0, 1.0;
      Eigen::Matrix<double, 3, 6> d_point;
      for (int i = 0; i < 3; ++i) d_point.col(i) = d_rot[i] * target_point;
      d_point.rightCols<3>().setIdentity();
      out[static_cast<std::size_t>(y) * w + x] = d_proj * d_point;
    }
  }
  return out;
}

}  // namespace occdepth
