// SPDX-License-Identifier: Apache-2.0
// Synthetic desk-scale scenes: analytic solids voxelized into a ground-truth
// field, with ring cameras and reference-rendered images.
#pragma once

#include <cstdint>
#include <string>

#include "splatinit/dataset.hpp"
#include "splatinit/field.hpp"

namespace splatinit {

struct ToySceneConfig {
  int grid_resolution = 64;     // ground-truth field resolution per axis
  int gt_samples = 512;         // samples per ray for the reference renders
  double solid_density = 400.0; // density inside solids (opaque at cell scale)
  Vec3 background = Vec3::Zero();
};

struct ToyScene {
  Dataset dataset;
  VoxelField field;  // ground truth the images were rendered from
};

// Builds one of the shipped scenes:
//   "spheres"                  four floating colored spheres
//   "boxes"                    three colored axis-aligned boxes
//   "reflective_floor_analog"  a large textureless light floor slab plus
//                              colored solids, for low-texture failure cases
// Cameras sit on a ring looking at the scene center, alternating between a
// low and a high height so both tops and undersides are observed. Every
// fifth view (i % 5 == 4) is a test view. The seed jitters solid placement
// and colors; identical inputs give bit-identical datasets.
// Throws std::domain_error for unknown names, std::invalid_argument for
// resolution < 8 or n_views < 4.
ToyScene make_toy_scene(const std::string& name, int resolution, int n_views,
                        std::uint64_t seed, const ToySceneConfig& config = {});

}  // namespace splatinit
