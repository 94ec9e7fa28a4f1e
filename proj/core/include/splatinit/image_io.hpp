// SPDX-License-Identifier: Apache-2.0
// 8-bit PNG reading and writing for dataset images and renders.
#pragma once

#include <string>

#include "splatinit/image.hpp"

namespace splatinit {

// Writes a 1- or 3-channel image as an 8-bit grayscale/RGB PNG. Values are
// clamped to [0,1] and rounded to the nearest of 256 levels. The byte stream
// is deterministic for identical pixel data. Throws std::runtime_error on
// I/O or encoding failure.
void write_png(const Image& image, const std::string& path);

// Reads an 8-bit PNG into a 1- or 3-channel image in [0,1]. Palette, alpha,
// 16-bit, and gray+alpha inputs are converted to 8-bit gray or RGB. Throws
// std::runtime_error on I/O or decoding failure.
Image read_png(const std::string& path);

}  // namespace splatinit
