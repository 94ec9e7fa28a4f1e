// SPDX-License-Identifier: Apache-2.0
// Dense row-major floating point image.
#pragma once

#include <cstddef>
#include <vector>

namespace splatinit {

// Row-major H x W x C image with double precision samples. Color images use
// three channels in [0, 1]; depth and alpha maps use a single channel.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c) {
    data.assign(static_cast<std::size_t>(w) * h * c, 0.0);
  }

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

}  // namespace splatinit
