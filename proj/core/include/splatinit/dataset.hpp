// SPDX-License-Identifier: Apache-2.0
// Posed-image dataset with an explicit train/test split, plus disk I/O.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "splatinit/geometry.hpp"
#include "splatinit/image.hpp"
#include "splatinit/types.hpp"

namespace splatinit {

// Cameras with matching images (values in [0, 1]) and disjoint train/test
// index lists that together cover every view. `bounds` is the scene's
// working volume: toy scenes record the volume their solids occupy, and
// field training uses it as the default grid domain.
struct Dataset {
  std::string name;
  std::vector<Camera> cameras;
  std::vector<Image> images;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  Aabb bounds;

  std::vector<Camera> train_cameras() const;
  std::vector<Camera> test_cameras() const;

  // Throws std::invalid_argument when sizes mismatch, the splits overlap,
  // or they fail to cover every view.
  void validate() const;
};

// Writes `dataset` under `dir`: cameras.json (one entry per view with fields
// fx, fy, cx, cy, width, height, R row-major, t, near, far, split, plus the
// image file name) and images/NNN.png as 8-bit lossless PNG. The JSON layout
// is documented in the README; writes are byte-stable for identical inputs.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Loads a dataset written by save_dataset. Throws std::runtime_error on
// missing or malformed files.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace splatinit
