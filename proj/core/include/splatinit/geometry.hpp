// SPDX-License-Identifier: Apache-2.0
// Pinhole cameras and the rays they cast.
#pragma once

#include <vector>

#include "splatinit/types.hpp"

namespace splatinit {

// World-space ray with a unit direction and a parametric range of interest.
struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();
  double t_min = 0.0;
  double t_max = kInf;

  Vec3 at(double t) const { return origin + t * dir; }
};

// Pinhole camera with a world-to-camera rigid pose: x_cam = R * x_world + t.
// Image coordinates are continuous; the center of integer pixel (i, j) sits
// at (i + 0.5, j + 0.5). The x axis points right, y down, z forward.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  double near = 0.01;
  double far = 100.0;

  // Camera center in world coordinates: -R^T t.
  Vec3 center() const { return -R.transpose() * t; }

  Vec3 world_to_camera(const Vec3& p) const { return R * p + t; }
  Vec3 camera_to_world(const Vec3& p) const { return R.transpose() * (p - t); }

  // Throws std::invalid_argument when intrinsics are non-positive, R is not
  // orthonormal (tolerance 1e-9), or the depth range is empty.
  void validate() const;
};

// World-space ray through continuous image point px. Requires
// 0 <= px < (width, height); callers pass (i + 0.5, j + 0.5) for the center
// of pixel (i, j). The returned direction has unit norm, the origin is the
// camera center, and [t_min, t_max] mirrors the camera's [near, far].
Ray pixel_ray(const Camera& camera, const Vec2& px);

// Convenience: ray through the center of integer pixel (ix, iy).
Ray pixel_center_ray(const Camera& camera, int ix, int iy);

// Tight axis-aligned bounding box of the camera centers.
// Throws std::invalid_argument when the list is empty.
Aabb camera_bbox(const std::vector<Camera>& cameras);

}  // namespace splatinit
