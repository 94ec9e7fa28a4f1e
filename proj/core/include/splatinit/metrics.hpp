// SPDX-License-Identifier: Apache-2.0
// Image quality metrics: PSNR and SSIM (with an analytic gradient for use
// as a training loss).
#pragma once

#include "splatinit/image.hpp"

namespace splatinit {

// 10 * log10(1 / MSE) over all channels, capped at 99 dB (also returned for
// identical images). Throws std::domain_error on shape mismatch.
double psnr(const Image& a, const Image& b);

// Mean SSIM over pixels and channels: 11x11 Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2. Windows are clipped at the borders and
// renormalized. Throws std::domain_error on shape mismatch.
double ssim(const Image& a, const Image& b);

struct SsimGradResult {
  double value = 0.0;
  Image d_a;  // gradient of the mean SSIM with respect to image `a`
};

// SSIM plus its exact gradient with respect to the first image.
SsimGradResult ssim_with_gradient(const Image& a, const Image& b);

// Precomputed moments of a fixed reference image, for repeated SSIM
// evaluations against it (e.g. a training loop revisiting the same views).
// ssim_with_gradient(a, b, ref) equals ssim_with_gradient(a, b) exactly when
// ref was built from b.
struct SsimReference {
  Image image;  // copy of the reference
  Image mu;     // windowed mean
  Image e_sq;   // windowed mean of the square
  std::vector<double> inv_x, inv_y;  // border renormalization factors
};

SsimReference make_ssim_reference(const Image& b);
SsimGradResult ssim_with_gradient(const Image& a, const SsimReference& ref);

}  // namespace splatinit
