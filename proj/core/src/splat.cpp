#include "splatinit/splat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "raster_internal.hpp"

namespace splatinit {

Mat3 rotation_matrix(const Vec4& quaternion) {
  const double n = quaternion.norm();
  if (!(n > 1e-12)) {
    throw std::invalid_argument("rotation_matrix: quaternion norm is (near) zero");
  }
  const double w = quaternion[0] / n, x = quaternion[1] / n, y = quaternion[2] / n,
               z = quaternion[3] / n;
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Mat3 covariance_matrix(const GaussianPrimitive& primitive) {
  const Mat3 r = rotation_matrix(primitive.rotation);
  const Vec3 d = (2.0 * primitive.log_scale).array().exp();
  return r * d.asDiagonal() * r.transpose();
}

double gaussian_depth_along_ray(const GaussianPrimitive& primitive, const Ray& ray) {
  const Mat3 inv_cov = covariance_matrix(primitive).inverse();
  const Vec3 rel = ray.origin - primitive.mean;
  const double numer = ray.dir.dot(inv_cov * rel);
  const double denom = ray.dir.dot(inv_cov * ray.dir);
  return -numer / denom;
}

namespace detail {

Mat23 projection_jacobian(const Camera& camera, const Vec3& q) {
  Mat23 j;
  const double iz = 1.0 / q[2];
  j << camera.fx * iz, 0.0, -camera.fx * q[0] * iz * iz,  //
      0.0, camera.fy * iz, -camera.fy * q[1] * iz * iz;
  return j;
}

}  // namespace detail

namespace {

// Evaluates the SH color head for one primitive; returns pre-clamp values.
Vec3 eval_sh(const std::vector<double>& sh, int degree, const Vec3& view_dir) {
  Vec3 c;
  for (int ch = 0; ch < 3; ++ch) {
    double v = 0.5 + kSh0 * sh[ch];
    if (degree >= 1) {
      v += kSh1 * (-view_dir[1] * sh[3 + ch] + view_dir[2] * sh[6 + ch] -
                   view_dir[0] * sh[9 + ch]);
    }
    c[ch] = v;
  }
  return c;
}

}  // namespace

std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& primitive,
                                                  const Camera& camera, double blur) {
  const Vec3 q = camera.world_to_camera(primitive.mean);
  if (!(q[2] > camera.near)) return std::nullopt;
  const Mat23 j = detail::projection_jacobian(camera, q);
  const Mat23 m = j * camera.R;
  Mat2 cov2d = m * covariance_matrix(primitive) * m.transpose();
  cov2d(0, 0) += blur;
  cov2d(1, 1) += blur;
  ProjectedGaussian out;
  out.cov2d = cov2d;
  out.mean2d = Vec2(camera.fx * q[0] / q[2] + camera.cx, camera.fy * q[1] / q[2] + camera.cy);
  out.depth_center = q[2];
  return out;
}

namespace detail {

void prepare_raster(const GaussianScene& scene, const Camera& camera,
                    const RenderConfig& config, RasterContext& ctx) {
  camera.validate();
  if (scene.sh_degree != 0 && scene.sh_degree != 1) {
    throw std::invalid_argument("render: sh_degree must be 0 or 1, got " +
                                std::to_string(scene.sh_degree));
  }
  const int coeffs = scene.sh_coeff_count();
  const size_t n_pixels_new = static_cast<size_t>(camera.width) * camera.height;
  // The per-pixel ray tables depend only on the camera; when a context is
  // reused with the same camera (training revisits a fixed view set) skip
  // rebuilding them.
  const bool reuse_rays =
      ctx.pixel_dirs.size() == n_pixels_new * 3 && ctx.pixel_quad.size() == n_pixels_new * 6 &&
      ctx.width == camera.width && ctx.height == camera.height && ctx.camera.fx == camera.fx &&
      ctx.camera.fy == camera.fy && ctx.camera.cx == camera.cx && ctx.camera.cy == camera.cy &&
      (ctx.camera.R.array() == camera.R.array()).all() &&
      (ctx.camera.t.array() == camera.t.array()).all();
  ctx.width = camera.width;
  ctx.height = camera.height;
  ctx.camera = camera;
  ctx.camera_center = camera.center();
  ctx.prims.clear();
  ctx.prims.reserve(scene.primitives.size());

  for (size_t pi = 0; pi < scene.primitives.size(); ++pi) {
    const GaussianPrimitive& g = scene.primitives[pi];
    if (static_cast<int>(g.sh.size()) < coeffs) {
      throw std::invalid_argument("render: primitive " + std::to_string(pi) +
                                  " has " + std::to_string(g.sh.size()) +
                                  " SH values, needs " + std::to_string(coeffs));
    }
    const double alpha = g.opacity();
    if (alpha < config.min_contribution) continue;  // can never pass the skip test

    const Vec3 q = camera.world_to_camera(g.mean);
    if (!(q[2] > camera.near)) continue;

    const Mat3 cov = covariance_matrix(g);
    const Mat23 j = projection_jacobian(camera, q);
    const Mat23 m = j * camera.R;
    Mat2 v = m * cov * m.transpose();
    v(0, 0) += config.blur;
    v(1, 1) += config.blur;
    const double det = v(0, 0) * v(1, 1) - v(0, 1) * v(0, 1);
    if (!(det > 0.0) || !std::isfinite(det)) continue;

    const double mid = 0.5 * (v(0, 0) + v(1, 1));
    const double lmax = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = config.footprint_sigmas * std::sqrt(lmax);
    // Candidate-list bounds. A pixel can contribute only when all three hold:
    //  - it lies within the footprint radius (part of the render definition),
    //  - the Gaussian clears the minimum-contribution guard, which confines
    //    the Mahalanobis distance to sqrt(2 ln(1/min_contribution)),
    //  - alpha * Gaussian clears the same guard, confining it further to
    //    sqrt(2 ln(alpha/min_contribution)).
    // The axis-aligned extent of the Mahalanobis-s ellipse is s * sqrt(var)
    // per axis, so intersecting the three regions gives an exact per-axis
    // bound; pixels outside it are skipped by the pixel-loop guards anyway,
    // and excluding them here changes no output.
    const double s_lim =
        std::sqrt(std::max(0.0, 2.0 * std::log(alpha / config.min_contribution)));
    const double radius_x = std::min(radius, s_lim * std::sqrt(v(0, 0)));
    const double radius_y = std::min(radius, s_lim * std::sqrt(v(1, 1)));
    const Vec2 mean2d(camera.fx * q[0] / q[2] + camera.cx,
                      camera.fy * q[1] / q[2] + camera.cy);
    // Pixel x covers center x + 0.5; intersect the footprint with the image.
    const int x_min = std::max(0, static_cast<int>(std::ceil(mean2d[0] - radius_x - 0.5)));
    const int x_max =
        std::min(camera.width - 1, static_cast<int>(std::floor(mean2d[0] + radius_x - 0.5)));
    const int y_min = std::max(0, static_cast<int>(std::ceil(mean2d[1] - radius_y - 0.5)));
    const int y_max =
        std::min(camera.height - 1, static_cast<int>(std::floor(mean2d[1] + radius_y - 0.5)));
    if (x_min > x_max || y_min > y_max) continue;

    RasterPrim rp;
    rp.prim_index = static_cast<int>(pi);
    rp.mean2d_x = mean2d[0];
    rp.mean2d_y = mean2d[1];
    rp.conic_a = v(1, 1) / det;
    rp.conic_b = -v(0, 1) / det;
    rp.conic_c = v(0, 0) / det;
    rp.alpha = alpha;
    rp.depth_center = q[2];
    rp.radius_px = radius;
    rp.x_min = x_min;
    rp.x_max = x_max;
    rp.y_min = y_min;
    rp.y_max = y_max;
    rp.cov2d = v;
    rp.mean_cam = q;
    rp.inv_cov = cov.inverse();
    rp.rel = ctx.camera_center - g.mean;
    const Vec3 inv_rel = rp.inv_cov * rp.rel;
    rp.u[0] = inv_rel[0];
    rp.u[1] = inv_rel[1];
    rp.u[2] = inv_rel[2];
    rp.psym2[0] = rp.inv_cov(0, 0);
    rp.psym2[1] = rp.inv_cov(1, 1);
    rp.psym2[2] = rp.inv_cov(2, 2);
    rp.psym2[3] = 2.0 * rp.inv_cov(0, 1);
    rp.psym2[4] = 2.0 * rp.inv_cov(0, 2);
    rp.psym2[5] = 2.0 * rp.inv_cov(1, 2);
    rp.view_dist = rp.rel.norm();
    rp.view_dir = rp.view_dist > 1e-12 ? Vec3(-rp.rel / rp.view_dist) : Vec3(0, 0, 1);
    const Vec3 pre = eval_sh(g.sh, scene.sh_degree, rp.view_dir);
    for (int ch = 0; ch < 3; ++ch) {
      rp.color[ch] = std::clamp(pre[ch], 0.0, 1.0);
      rp.color_clamped[ch] = pre[ch] < 0.0 || pre[ch] > 1.0;
    }
    ctx.prims.push_back(rp);
  }

  // Depth order with index tie-break; per-pixel lists inherit this order
  // because they are filled by iterating the sorted array. Sorting indices
  // and permuting once avoids shuffling the wide structs inside the sort.
  std::vector<int> order(ctx.prims.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const RasterPrim& pa = ctx.prims[static_cast<size_t>(a)];
    const RasterPrim& pb = ctx.prims[static_cast<size_t>(b)];
    if (pa.depth_center != pb.depth_center) return pa.depth_center < pb.depth_center;
    return pa.prim_index < pb.prim_index;
  });
  {
    std::vector<RasterPrim> sorted;
    sorted.reserve(ctx.prims.size());
    for (int idx : order) sorted.push_back(std::move(ctx.prims[static_cast<size_t>(idx)]));
    ctx.prims = std::move(sorted);
  }

  // Pack the pixel-loop fields of the sorted primitives.
  ctx.test_data.resize(ctx.prims.size() * RasterContext::kTestStride);
  ctx.comp_data.resize(ctx.prims.size() * RasterContext::kCompStride);
  for (size_t ai = 0; ai < ctx.prims.size(); ++ai) {
    const RasterPrim& rp = ctx.prims[ai];
    double* td = &ctx.test_data[ai * RasterContext::kTestStride];
    td[0] = rp.mean2d_x;
    td[1] = rp.mean2d_y;
    td[2] = rp.conic_a;
    td[3] = rp.conic_b;
    td[4] = rp.conic_c;
    td[5] = rp.alpha;
    double* cd = &ctx.comp_data[ai * RasterContext::kCompStride];
    cd[0] = rp.color[0];
    cd[1] = rp.color[1];
    cd[2] = rp.color[2];
    cd[3] = rp.u[0];
    cd[4] = rp.u[1];
    cd[5] = rp.u[2];
    for (int k = 0; k < 6; ++k) cd[6 + k] = rp.psym2[k];
  }

  const size_t n_pixels = static_cast<size_t>(ctx.width) * ctx.height;
  ctx.offsets.assign(n_pixels + 1, 0);
  uint64_t total = 0;
  for (const RasterPrim& rp : ctx.prims) {
    total += static_cast<uint64_t>(rp.x_max - rp.x_min + 1) *
             static_cast<uint64_t>(rp.y_max - rp.y_min + 1);
  }
  constexpr uint64_t kMaxEntries = 100'000'000;
  if (total > kMaxEntries) {
    throw std::runtime_error("render: per-pixel candidate lists need " + std::to_string(total) +
                             " entries, above the safety cap of " + std::to_string(kMaxEntries));
  }
  for (const RasterPrim& rp : ctx.prims) {
    for (int y = rp.y_min; y <= rp.y_max; ++y) {
      const size_t row = static_cast<size_t>(y) * ctx.width;
      for (int x = rp.x_min; x <= rp.x_max; ++x) ++ctx.offsets[row + x + 1];
    }
  }
  for (size_t i = 1; i <= n_pixels; ++i) ctx.offsets[i] += ctx.offsets[i - 1];
  ctx.entries.assign(static_cast<size_t>(total), 0);
  std::vector<int> cursor(ctx.offsets.begin(), ctx.offsets.end() - 1);
  for (size_t ai = 0; ai < ctx.prims.size(); ++ai) {
    const RasterPrim& rp = ctx.prims[ai];
    for (int y = rp.y_min; y <= rp.y_max; ++y) {
      const size_t row = static_cast<size_t>(y) * ctx.width;
      for (int x = rp.x_min; x <= rp.x_max; ++x) {
        ctx.entries[static_cast<size_t>(cursor[row + x]++)] = static_cast<int>(ai);
      }
    }
  }

  // Unit ray directions through every pixel center, plus their monomials for
  // the quadratic form in the per-pixel depth denominator.
  if (reuse_rays) return;
  ctx.pixel_dirs.resize(n_pixels * 3);
  ctx.pixel_quad.resize(n_pixels * 6);
  for (int y = 0; y < ctx.height; ++y) {
    for (int x = 0; x < ctx.width; ++x) {
      const Vec3 d_cam((x + 0.5 - camera.cx) / camera.fx, (y + 0.5 - camera.cy) / camera.fy, 1.0);
      const Vec3 d = (camera.R.transpose() * d_cam).normalized();
      const size_t pix = static_cast<size_t>(y) * ctx.width + x;
      ctx.pixel_dirs[pix * 3] = d[0];
      ctx.pixel_dirs[pix * 3 + 1] = d[1];
      ctx.pixel_dirs[pix * 3 + 2] = d[2];
      double* q = &ctx.pixel_quad[pix * 6];
      q[0] = d[0] * d[0];
      q[1] = d[1] * d[1];
      q[2] = d[2] * d[2];
      q[3] = d[0] * d[1];
      q[4] = d[0] * d[2];
      q[5] = d[1] * d[2];
    }
  }
}

}  // namespace detail

RenderOutput render(const GaussianScene& scene, const Camera& camera,
                    const RenderConfig& config) {
  detail::RasterContext ctx;
  detail::prepare_raster(scene, camera, config, ctx);
  return detail::raster_forward(scene, ctx, config);
}

SceneGrads render_backward(const GaussianScene& scene, const Camera& camera,
                           const Image& d_color, const Image& d_depth,
                           const RenderConfig& config) {
  detail::RasterContext ctx;
  detail::prepare_raster(scene, camera, config, ctx);
  return detail::raster_backward(scene, ctx, d_color, d_depth, config);
}

}  // namespace splatinit
