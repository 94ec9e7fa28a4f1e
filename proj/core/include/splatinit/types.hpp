// SPDX-License-Identifier: Apache-2.0
// Small shared math types used across the library.
#pragma once

#include <Eigen/Dense>

#include <limits>

namespace splatinit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Axis-aligned bounding box.
struct Aabb {
  Vec3 min = Vec3::Constant(kInf);
  Vec3 max = Vec3::Constant(-kInf);

  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double largest_extent() const { return extent().maxCoeff(); }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  static Aabb cube(const Vec3& center, double side) {
    Aabb box;
    box.min = center - Vec3::Constant(0.5 * side);
    box.max = center + Vec3::Constant(0.5 * side);
    return box;
  }
};

}  // namespace splatinit
