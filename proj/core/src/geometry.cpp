// SPDX-License-Identifier: Apache-2.0
#include "splatinit/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace splatinit {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("camera: focal lengths must be positive");
  }
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw std::invalid_argument("camera: intrinsics must be finite");
  }
  if (width < 1 || height < 1) {
    throw std::invalid_argument("camera: image size must be at least 1x1");
  }
  if (!R.allFinite() || !t.allFinite()) {
    throw std::invalid_argument("camera: pose must be finite");
  }
  const Mat3 gram = R.transpose() * R;
  const double err = (gram - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (err >= 1e-9) {
    throw std::invalid_argument("camera: rotation is not orthonormal (|R^T R - I| = " +
                                std::to_string(err) + ")");
  }
  if (!(near > 0.0) || !(far > near) || !std::isfinite(near)) {
    throw std::invalid_argument("camera: need 0 < near < far");
  }
}

Ray pixel_ray(const Camera& camera, const Vec2& px) {
  if (!(px.x() >= 0.0) || !(px.x() < camera.width) || !(px.y() >= 0.0) ||
      !(px.y() < camera.height)) {
    throw std::invalid_argument("pixel_ray: pixel outside the image");
  }
  const Vec3 dir_cam((px.x() - camera.cx) / camera.fx, (px.y() - camera.cy) / camera.fy, 1.0);
  Ray ray;
  ray.origin = camera.center();
  ray.dir = (camera.R.transpose() * dir_cam).normalized();
  ray.t_min = camera.near;
  ray.t_max = camera.far;
  return ray;
}

Ray pixel_center_ray(const Camera& camera, int ix, int iy) {
  return pixel_ray(camera, Vec2(ix + 0.5, iy + 0.5));
}

Aabb camera_bbox(const std::vector<Camera>& cameras) {
  if (cameras.empty()) {
    throw std::invalid_argument("camera_bbox: empty camera list");
  }
  Aabb box;
  for (const Camera& camera : cameras) box.expand(camera.center());
  return box;
}

}  // namespace splatinit
