// Shared state between the rasterizer's forward and backward passes:
// projected primitives and per-pixel candidate lists for one
// (scene, camera) pair. Internal to the library.
#pragma once

#include <vector>

#include "splatinit/geometry.hpp"
#include "splatinit/splat.hpp"
#include "splatinit/types.hpp"

namespace splatinit::detail {

// Camera-specific derived quantities of one visible primitive. Everything a
// pixel loop touches is precomputed here; per-pixel work is arithmetic only.
// Hot fields (read per pixel) come first so they share cache lines.
struct RasterPrim {
  double mean2d_x = 0.0;  // projected mean, pixel coordinates
  double mean2d_y = 0.0;
  double conic_a = 0.0;   // inverse 2D covariance, (xx, xy, yy)
  double conic_b = 0.0;
  double conic_c = 0.0;
  double alpha = 0.0;     // sigmoid(opacity_logit)
  double color[3] = {0.0, 0.0, 0.0};  // SH-evaluated RGB, clamped to [0,1]
  // Per-pixel depth d = -(v . u) / (v^T P v) with P = Sigma^-1 and v the unit
  // pixel direction. `u` is Sigma^-1 (camera_center - mean); `psym2` holds the
  // six distinct entries of P with the off-diagonals pre-doubled, ordered to
  // pair with RasterContext::pixel_quad: {P00, P11, P22, 2P01, 2P02, 2P12}.
  double u[3] = {0.0, 0.0, 0.0};
  double psym2[6] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

  int prim_index = 0;  // index into scene.primitives
  bool color_clamped[3] = {false, false, false};
  double depth_center = 0.0;  // camera-space z (sort key)
  double radius_px = 0.0;     // footprint radius in pixels
  int x_min = 0, x_max = 0, y_min = 0, y_max = 0;  // inclusive pixel bbox
  // World-space quantities for the once-per-primitive backward chain.
  Mat3 inv_cov;   // Sigma^-1
  Vec3 rel;       // camera_center - mean
  // Cached intermediates for the backward chain.
  Mat2 cov2d;     // blur included
  Vec3 mean_cam;  // camera-space mean
  Vec3 view_dir;  // normalized mean - camera_center (SH degree 1)
  double view_dist = 0.0;
};

// Perspective Jacobian of camera-space point q -> pixel coordinates.
Mat23 projection_jacobian(const Camera& camera, const Vec3& q);

struct RasterContext {
  int width = 0;
  int height = 0;
  Camera camera;
  Vec3 camera_center;
  std::vector<RasterPrim> prims;   // visible, sorted by (depth_center, index)
  std::vector<int> offsets;        // per-pixel CSR offsets, size W*H + 1
  std::vector<int> entries;        // indices into `prims`, depth-ordered
  std::vector<double> pixel_dirs;  // 3 doubles per pixel, unit ray directions
  // 6 doubles per pixel, monomials of the unit direction ordered to pair with
  // RasterPrim::psym2: {v0 v0, v1 v1, v2 v2, v0 v1, v0 v2, v1 v2}.
  std::vector<double> pixel_quad;
  // Copies of the RasterPrim fields the pixel loops touch, packed so a
  // rejected candidate reads one cache line and an accepted one reads two.
  // test_data: kTestStride per prim {mean2d_x, mean2d_y, conic_a, conic_b,
  // conic_c, alpha}; comp_data: kCompStride per prim {color[3], u[3],
  // psym2[6]}.
  static constexpr int kTestStride = 6;
  static constexpr int kCompStride = 12;
  std::vector<double> test_data;
  std::vector<double> comp_data;
};

// Projects, culls, sorts, and builds the per-pixel candidate lists.
// Throws std::runtime_error if the candidate lists would exceed a sanity cap.
void prepare_raster(const GaussianScene& scene, const Camera& camera,
                    const RenderConfig& config, RasterContext& ctx);

// Forward compositing over a prepared context.
RenderOutput raster_forward(const GaussianScene& scene, const RasterContext& ctx,
                            const RenderConfig& config);

// Adjoint over a prepared context (identical guards to raster_forward).
SceneGrads raster_backward(const GaussianScene& scene, const RasterContext& ctx,
                           const Image& d_color, const Image& d_depth,
                           const RenderConfig& config);

}  // namespace splatinit::detail
