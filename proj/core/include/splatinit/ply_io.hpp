// SPDX-License-Identifier: Apache-2.0
// PLY point-cloud reading and writing (ASCII and binary little-endian).
#pragma once

#include <string>

#include "splatinit/point_cloud.hpp"

namespace splatinit {

// Writes vertices with properties x, y, z (float32) and red, green, blue
// (uint8, colors quantized from [0,1]). Binary little-endian by default,
// ASCII with 9-significant-digit floats otherwise; both round-trip
// positions exactly at float32 precision. Requires a non-empty cloud.
void write_ply(const PointCloud& cloud, const std::string& path, bool binary = true);

// Reads a PLY vertex cloud written in either format. Unknown scalar
// properties are skipped; position properties must be float32 and colors
// uint8. Malformed headers, bad counts, or truncated payloads raise
// std::runtime_error naming the offending line or vertex.
PointCloud read_ply(const std::string& path);

}  // namespace splatinit
