// SPDX-License-Identifier: Apache-2.0
// 3D Gaussian primitives with depth-sorted alpha-composited rendering of
// color and depth, plus analytic gradients for every primitive parameter.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "splatinit/geometry.hpp"
#include "splatinit/image.hpp"
#include "splatinit/types.hpp"

namespace splatinit {

// SH basis constants (degree 0 and 1) for the color head.
constexpr double kSh0 = 0.28209479177387814;
constexpr double kSh1 = 0.4886025119029199;

// One anisotropic Gaussian: mean, per-axis log scale, unit quaternion
// (w, x, y, z), opacity logit, and per-channel SH color coefficients laid
// out coefficient-major with interleaved RGB (3 values for degree 0,
// 12 for degree 1).
struct GaussianPrimitive {
  Vec3 mean = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
  double opacity_logit = 0.0;
  std::vector<double> sh = {0.0, 0.0, 0.0};

  double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
};

// Rotation matrix of a quaternion (w, x, y, z); normalizes internally so
// gradients can flow through unnormalized optimizer iterates.
Mat3 rotation_matrix(const Vec4& quaternion);

// Covariance R * diag(exp(2 * log_scale)) * R^T; SPD by construction.
Mat3 covariance_matrix(const GaussianPrimitive& primitive);

struct GaussianScene {
  std::vector<GaussianPrimitive> primitives;
  Vec3 background = Vec3::Zero();
  int sh_degree = 0;  // 0 or 1

  int sh_coeff_count() const { return 3 * (sh_degree + 1) * (sh_degree + 1); }
};

// Depth of the maximum of G(o + t d) along the ray: the stationary point
// t* = -(d^T Sigma^-1 (o - mu)) / (d^T Sigma^-1 d). Negative values are
// returned as-is; culling them is the renderer's job.
double gaussian_depth_along_ray(const GaussianPrimitive& primitive, const Ray& ray);

// Numerical guards of the rasterizer. Every threshold that shapes the image
// lives here so tests can pin or relax them explicitly.
struct RenderConfig {
  double blur = 0.3;                     // px^2 added to the cov2d diagonal
  double max_contribution = 0.999;       // clamp on alpha * G
  double min_contribution = 1.0 / 255.0; // contributions below are skipped
  double transmittance_floor = 1e-4;     // stop compositing once T drops below
  double footprint_sigmas = 3.0;         // screen-space footprint radius
};

struct ProjectedGaussian {
  Vec2 mean2d;          // pixel coordinates of the projected mean
  Mat2 cov2d;           // EWA screen-space covariance, blur included
  double depth_center;  // camera-space z of the mean (sort key)
};

// EWA projection: mean2d = perspective projection of the mean, cov2d =
// J W Sigma W^T J^T + blur I at the mean. Returns nullopt (culled) when the
// mean is not in front of the camera (z <= near).
std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& primitive,
                                                  const Camera& camera, double blur = 0.3);

struct RenderOutput {
  Image color;  // H x W x 3 in [0,1]
  Image depth;  // H x W x 1, alpha-weighted closed-form depths
  Image alpha;  // H x W x 1 accumulated opacity
};

// Depth-sorted per-pixel alpha compositing of color, depth, and opacity.
// Visible primitives are sorted by depth_center (ties broken by primitive
// index), each contributes within footprint_sigmas of its 2D footprint, and
// per-pixel contributions alpha*G are clamped/skipped per `config`.
// Primitives whose closed-form depth is <= 0 for a pixel are skipped for
// that pixel. Deterministic for a fixed thread count.
RenderOutput render(const GaussianScene& scene, const Camera& camera,
                    const RenderConfig& config = {});

struct PrimitiveGrads {
  Vec3 d_mean = Vec3::Zero();
  Vec3 d_log_scale = Vec3::Zero();
  Vec4 d_rotation = Vec4::Zero();
  double d_opacity_logit = 0.0;
  std::array<double, 12> d_sh{};  // entries beyond the active degree stay 0
};

struct SceneGrads {
  std::vector<PrimitiveGrads> primitives;
  // Densification statistics from this backward pass: norm of the
  // NDC-scaled screen-space mean gradient, and the screen footprint radius
  // (pixels; 0 for culled primitives).
  std::vector<double> mean2d_grad_norm;
  std::vector<double> radius_px;
};

// Exact adjoint of render() for the given upstream gradient images,
// including the depth term's dependence on mean and covariance. Recomputes
// the forward compositing internally with identical guards. Throws
// std::runtime_error naming the primitive on a non-finite gradient.
SceneGrads render_backward(const GaussianScene& scene, const Camera& camera,
                           const Image& d_color, const Image& d_depth,
                           const RenderConfig& config = {});

}  // namespace splatinit
