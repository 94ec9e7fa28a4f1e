// SPDX-License-Identifier: Apache-2.0
// Colored point cloud shared by the init strategies and the field sampler.
#pragma once

#include <vector>

#include "splatinit/types.hpp"

namespace splatinit {

// N positions (world units) with RGB colors in [0, 1].
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;

  std::size_t size() const { return positions.size(); }
};

}  // namespace splatinit
