// SPDX-License-Identifier: Apache-2.0
// Initialization strategies for Gaussian scenes: random boxes around the
// cameras, a fixed world-space box, and conversion of sampled point clouds.
#pragma once

#include <cstdint>
#include <vector>

#include "splatinit/geometry.hpp"
#include "splatinit/point_cloud.hpp"
#include "splatinit/splat.hpp"

namespace splatinit {

enum class InitStrategy { bbox_multiple, constant_box, point_cloud };

struct InitConfig {
  InitStrategy strategy = InitStrategy::point_cloud;
  double multiplier = 3.0;  // bbox_multiple: cube side / camera-bbox largest side
  double extent = 50.0;     // constant_box: cube side, origin-centered
  int n_points = 1000;
  std::uint64_t seed = 0;
};

// Uniform points (and uniform colors) in the cube centered at the camera
// bounding box center whose side is multiplier times the bbox's largest
// extent. A degenerate (zero-extent) bbox falls back to a unit cube with a
// warning on stderr. Deterministic given the seed.
PointCloud bbox_random_init(const std::vector<Camera>& cameras, double multiplier, int n,
                            std::uint64_t seed);

// Uniform points (and uniform colors) in the origin-centered cube of the
// given side, independent of any cameras. Deterministic given the seed.
PointCloud constant_box_init(double extent, int n, std::uint64_t seed);

struct SceneFromPointsConfig {
  double initial_opacity = 0.1;
  double scale_clamp_min = 1e-4;  // lower bound on the 3-NN mean distance
  // Upper bound on the 3-NN mean distance; <= 0 derives it from the cloud's
  // bounding box largest side (1.0 when that is degenerate).
  double scene_extent = 0.0;
};

// One degree-0 primitive per point: mean = position (bit-exact), isotropic
// log_scale = log of the clamped mean distance to the 3 nearest neighbors,
// identity rotation, opacity logit of initial_opacity, SH coefficients that
// reproduce the point color. Throws std::domain_error when the cloud has
// fewer than 4 points.
GaussianScene scene_from_point_cloud(const PointCloud& cloud,
                                     const SceneFromPointsConfig& config = {});

}  // namespace splatinit
