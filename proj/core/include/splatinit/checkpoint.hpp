// SPDX-License-Identifier: Apache-2.0
// Binary checkpoints: VFLD for voxel fields, GSPL for Gaussian scenes.
// Both store parameters as little-endian float32 and round-trip exactly at
// that precision.
#pragma once

#include <string>

#include "splatinit/field.hpp"
#include "splatinit/splat.hpp"

namespace splatinit {

// VFLD: magic "VFLD", version u32, resolution 3xu32, bounds 6xf64
// (min xyz, max xyz), density f32 per node (x-fastest), color 3xf32 per
// node. Throws std::runtime_error on I/O failure.
void save_field(const VoxelField& field, const std::string& path);

// Throws std::runtime_error on bad magic, unsupported version, or
// truncation (the message names what was being read).
VoxelField load_field(const std::string& path);

// GSPL: magic "GSPL", version u32, count u32, sh degree u32, then per
// primitive mean 3xf32, log_scale 3xf32, rotation 4xf32 (w, x, y, z),
// opacity logit f32, SH coefficients 3*(degree+1)^2 x f32. The background
// color is a runtime setting and is not stored.
void save_scene(const GaussianScene& scene, const std::string& path);

GaussianScene load_scene(const std::string& path);

}  // namespace splatinit
