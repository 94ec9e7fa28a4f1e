#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "raster_internal.hpp"
#include "splatinit/parallel.hpp"

namespace splatinit::detail {

namespace {

// Flat per-primitive accumulator layout (doubles per visible primitive).
// Pixel loops write only these; everything else happens once per primitive.
constexpr int kDMean2d = 0;    // 2: screen-space mean gradient (pixels)
constexpr int kGConic = 2;     // 3: inverse 2D covariance (xx, xy, yy)
constexpr int kGInvCov = 5;    // 9: world inverse covariance, row-major
constexpr int kDMeanDepth = 14;  // 3: direct mean gradient from the depth term
constexpr int kGColor = 17;    // 3: per-channel sum of upstream color * weight
constexpr int kDAlpha = 20;    // 1: opacity (post-sigmoid) gradient
constexpr int kStride = 21;

struct PixelRecord {
  int active;     // index into ctx.prims
  double gauss;   // exp(power)
  double a_hat;   // clamped alpha * gauss
  double d;       // closed-form depth along the pixel ray
  double denom;   // v^T Sigma^-1 v for that depth
  double trans;   // transmittance on entry
  double weight;  // a_hat * trans
  bool clamped;   // alpha * gauss exceeded max_contribution
};

// Gradient of the rotation matrix in the entries of a unit quaternion
// (w, x, y, z): returns sum(upstream .* dR/dq_k) for k = 0..3.
Vec4 quat_rotation_grad(const Vec4& q, const Mat3& up) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 dw, dx, dy, dz;
  dw << 0, -z, y, z, 0, -x, -y, x, 0;
  dx << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  dy << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  dz << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  return 2.0 * Vec4(up.cwiseProduct(dw).sum(), up.cwiseProduct(dx).sum(),
                    up.cwiseProduct(dy).sum(), up.cwiseProduct(dz).sum());
}

}  // namespace

SceneGrads raster_backward(const GaussianScene& scene, const RasterContext& ctx,
                           const Image& d_color, const Image& d_depth,
                           const RenderConfig& config) {
  if (d_color.width != ctx.width || d_color.height != ctx.height || d_color.channels != 3) {
    throw std::invalid_argument("render_backward: d_color shape mismatch");
  }
  if (d_depth.width != ctx.width || d_depth.height != ctx.height || d_depth.channels != 1) {
    throw std::invalid_argument("render_backward: d_depth shape mismatch");
  }
  const size_t n_active = ctx.prims.size();
  const Vec3 bg = scene.background;
  const double log_min = std::log(config.min_contribution);
  const int slices = thread_count();
  std::vector<std::vector<double>> partials(
      static_cast<size_t>(slices), std::vector<double>(n_active * kStride, 0.0));

  parallel_for_slices(ctx.height, [&](int slice, std::int64_t row_begin, std::int64_t row_end) {
    std::vector<double>& acc = partials[static_cast<size_t>(slice)];
    std::vector<PixelRecord> records;
    for (std::int64_t y = row_begin; y < row_end; ++y) {
      for (int x = 0; x < ctx.width; ++x) {
        const size_t pix = static_cast<size_t>(y) * ctx.width + x;
        const int iy = static_cast<int>(y);
        const double g_c0 = d_color.at(x, iy, 0);
        const double g_c1 = d_color.at(x, iy, 1);
        const double g_c2 = d_color.at(x, iy, 2);
        const double g_d = d_depth.at(x, iy, 0);
        if (g_c0 == 0.0 && g_c1 == 0.0 && g_c2 == 0.0 && g_d == 0.0) continue;

        const double px = x + 0.5, py = y + 0.5;
        const double* v = &ctx.pixel_dirs[pix * 3];
        const double* q = &ctx.pixel_quad[pix * 6];

        // Replay the forward compositing with identical guards, recording
        // every contribution so the suffix sums can run back to front.
        records.clear();
        double trans = 1.0;
        for (int e = ctx.offsets[pix]; e < ctx.offsets[pix + 1]; ++e) {
          const int ai = ctx.entries[e];
          const double* td = &ctx.test_data[ai * RasterContext::kTestStride];
          const double dx = px - td[0], dy = py - td[1];
          const double power = -0.5 * (td[2] * dx * dx + 2.0 * td[3] * dx * dy + td[4] * dy * dy);
          if (power > 0.0 || power < log_min) continue;
          const double gauss = std::exp(power);
          const double raw = td[5] * gauss;
          if (raw < config.min_contribution) continue;
          const bool clamped = raw > config.max_contribution;
          const double a_hat = clamped ? config.max_contribution : raw;
          const double* cd = &ctx.comp_data[ai * RasterContext::kCompStride];
          const double numer = cd[3] * v[0] + cd[4] * v[1] + cd[5] * v[2];
          const double denom = cd[6] * q[0] + cd[7] * q[1] + cd[8] * q[2] + cd[9] * q[3] +
                               cd[10] * q[4] + cd[11] * q[5];
          const double d = -numer / denom;
          if (!(d > 0.0)) continue;
          records.push_back({ai, gauss, a_hat, d, denom, trans, a_hat * trans, clamped});
          trans *= 1.0 - a_hat;
          if (trans < config.transmittance_floor) break;
        }

        // Reverse sweep: suffix holds sum_{j>i} r_j * weight_j.
        double suffix = 0.0;
        for (size_t ri = records.size(); ri-- > 0;) {
          const PixelRecord& rec = records[ri];
          const double* td = &ctx.test_data[rec.active * RasterContext::kTestStride];
          const double* cd = &ctx.comp_data[rec.active * RasterContext::kCompStride];
          double* a = &acc[static_cast<size_t>(rec.active) * kStride];
          const double r = g_c0 * (cd[0] - bg[0]) + g_c1 * (cd[1] - bg[1]) +
                           g_c2 * (cd[2] - bg[2]) + g_d * rec.d;
          // d(weight_i)/d(a_hat_i) = trans_i, and every later weight scales
          // by (1 - a_hat_i); max_contribution keeps the divisor >= 1e-3.
          const double d_a_hat = r * rec.trans - suffix / (1.0 - rec.a_hat);
          suffix += r * rec.weight;

          a[kGColor] += g_c0 * rec.weight;
          a[kGColor + 1] += g_c1 * rec.weight;
          a[kGColor + 2] += g_c2 * rec.weight;

          if (g_d != 0.0) {
            // Depth term: d = -(v . P rel) / (v . P v) with P = inv_cov.
            const double gd = g_d * rec.weight;
            const double p01 = 0.5 * cd[9], p02 = 0.5 * cd[10], p12 = 0.5 * cd[11];
            const double pv0 = cd[6] * v[0] + p01 * v[1] + p02 * v[2];
            const double pv1 = p01 * v[0] + cd[7] * v[1] + p12 * v[2];
            const double pv2 = p02 * v[0] + p12 * v[1] + cd[8] * v[2];
            const double scale_mean = gd / rec.denom;
            a[kDMeanDepth] += scale_mean * pv0;
            a[kDMeanDepth + 1] += scale_mean * pv1;
            a[kDMeanDepth + 2] += scale_mean * pv2;
            // d(d)/dP = -(1/denom) * v (rel + d v)^T, entries independent.
            const Vec3& rel = ctx.prims[static_cast<size_t>(rec.active)].rel;
            const double rhs0 = rel[0] + rec.d * v[0];
            const double rhs1 = rel[1] + rec.d * v[1];
            const double rhs2 = rel[2] + rec.d * v[2];
            const double s = -gd / rec.denom;
            for (int i = 0; i < 3; ++i) {
              const double svi = s * v[i];
              a[kGInvCov + 3 * i] += svi * rhs0;
              a[kGInvCov + 3 * i + 1] += svi * rhs1;
              a[kGInvCov + 3 * i + 2] += svi * rhs2;
            }
          }

          if (!rec.clamped) {
            a[kDAlpha] += d_a_hat * rec.gauss;
            const double d_power = d_a_hat * td[5] * rec.gauss;
            const double dx = px - td[0], dy = py - td[1];
            const double qd_x = td[2] * dx + td[3] * dy;
            const double qd_y = td[3] * dx + td[4] * dy;
            a[kDMean2d] += d_power * qd_x;
            a[kDMean2d + 1] += d_power * qd_y;
            a[kGConic] += d_power * (-0.5 * dx * dx);
            a[kGConic + 1] += d_power * (-0.5 * dx * dy);
            a[kGConic + 2] += d_power * (-0.5 * dy * dy);
          }
        }
      }
    }
  });

  // Merge slice partials in slice order so results do not depend on timing.
  std::vector<double>& acc = partials[0];
  for (int s = 1; s < slices; ++s) {
    const std::vector<double>& other = partials[static_cast<size_t>(s)];
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += other[i];
  }

  SceneGrads grads;
  grads.primitives.assign(scene.primitives.size(), PrimitiveGrads{});
  grads.mean2d_grad_norm.assign(scene.primitives.size(), 0.0);
  grads.radius_px.assign(scene.primitives.size(), 0.0);

  // Per-primitive tail of the chain: screen-space and world-space matrix
  // gradients down to mean, log scale, rotation, opacity, and SH.
  parallel_for(static_cast<std::int64_t>(n_active), [&](std::int64_t ai) {
    const RasterPrim& p = ctx.prims[static_cast<size_t>(ai)];
    const double* a = &acc[static_cast<size_t>(ai) * kStride];
    const GaussianPrimitive& g = scene.primitives[static_cast<size_t>(p.prim_index)];
    PrimitiveGrads& out = grads.primitives[static_cast<size_t>(p.prim_index)];

    const Vec2 d_mean2d(a[kDMean2d], a[kDMean2d + 1]);
    Mat2 g_conic;
    g_conic << a[kGConic], a[kGConic + 1], a[kGConic + 1], a[kGConic + 2];
    Mat3 g_inv_cov;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) g_inv_cov(i, j) = a[kGInvCov + 3 * i + j];
    }

    // conic = cov2d^-1  =>  d/d(cov2d) = -conic * upstream * conic.
    Mat2 conic;
    conic << p.conic_a, p.conic_b, p.conic_b, p.conic_c;
    const Mat2 g_cov2d = -conic * g_conic * conic;

    // cov2d = M cov M^T + blur I with M = J W.
    const Mat3 cov = covariance_matrix(g);
    const Mat23 j = projection_jacobian(ctx.camera, p.mean_cam);
    const Mat23 m = j * ctx.camera.R;
    Mat3 g_cov = m.transpose() * g_cov2d * m;
    const Mat23 g_m = 2.0 * g_cov2d * m * cov;
    const Mat23 g_j = g_m * ctx.camera.R.transpose();

    // Camera-space mean gradient through J's entries and the projection.
    const double qx = p.mean_cam[0], qy = p.mean_cam[1], qz = p.mean_cam[2];
    const double iz2 = 1.0 / (qz * qz), iz3 = iz2 / qz;
    const double fx = ctx.camera.fx, fy = ctx.camera.fy;
    Vec3 g_q(-g_j(0, 2) * fx * iz2, -g_j(1, 2) * fy * iz2,
             -g_j(0, 0) * fx * iz2 - g_j(1, 1) * fy * iz2 + 2.0 * g_j(0, 2) * fx * qx * iz3 +
                 2.0 * g_j(1, 2) * fy * qy * iz3);
    g_q += j.transpose() * d_mean2d;
    Vec3 d_mean = ctx.camera.R.transpose() * g_q;
    d_mean += Vec3(a[kDMeanDepth], a[kDMeanDepth + 1], a[kDMeanDepth + 2]);

    // inv_cov = cov^-1 feeds the depth term.
    g_cov += -p.inv_cov * g_inv_cov * p.inv_cov;

    // cov = (R S)(R S)^T with S = diag(exp(log_scale)).
    const Mat3 rot = rotation_matrix(g.rotation);
    const Vec3 s = g.log_scale.array().exp();
    const Mat3 m3 = rot * s.asDiagonal();
    const Mat3 g_m3 = (g_cov + g_cov.transpose()) * m3;
    const Mat3 rt_gm3 = rot.transpose() * g_m3;
    const Vec3 d_log_scale = rt_gm3.diagonal().cwiseProduct(s);
    const Mat3 g_rot = g_m3 * s.asDiagonal();
    const double qn = g.rotation.norm();
    const Vec4 qhat = g.rotation / qn;
    const Vec4 g_qhat = quat_rotation_grad(qhat, g_rot);
    const Vec4 d_rotation = (g_qhat - qhat * qhat.dot(g_qhat)) / qn;

    // SH head; clamped channels pass no gradient.
    std::array<double, 12> d_sh{};
    Vec3 d_dir = Vec3::Zero();
    for (int ch = 0; ch < 3; ++ch) {
      if (p.color_clamped[ch]) continue;
      const double gc = a[kGColor + ch];
      d_sh[static_cast<size_t>(ch)] = gc * kSh0;
      if (scene.sh_degree >= 1) {
        d_sh[static_cast<size_t>(3 + ch)] = gc * kSh1 * -p.view_dir[1];
        d_sh[static_cast<size_t>(6 + ch)] = gc * kSh1 * p.view_dir[2];
        d_sh[static_cast<size_t>(9 + ch)] = gc * kSh1 * -p.view_dir[0];
        d_dir += gc * kSh1 * Vec3(-g.sh[static_cast<size_t>(9 + ch)],
                                  -g.sh[static_cast<size_t>(3 + ch)],
                                  g.sh[static_cast<size_t>(6 + ch)]);
      }
    }
    if (scene.sh_degree >= 1 && p.view_dist > 1e-12) {
      d_mean += (d_dir - p.view_dir * p.view_dir.dot(d_dir)) / p.view_dist;
    }

    out.d_mean = d_mean;
    out.d_log_scale = d_log_scale;
    out.d_rotation = d_rotation;
    out.d_opacity_logit = a[kDAlpha] * p.alpha * (1.0 - p.alpha);
    out.d_sh = d_sh;
    grads.mean2d_grad_norm[static_cast<size_t>(p.prim_index)] =
        std::hypot(d_mean2d[0] * 0.5 * ctx.width, d_mean2d[1] * 0.5 * ctx.height);
    grads.radius_px[static_cast<size_t>(p.prim_index)] = p.radius_px;
  });

  for (size_t pi = 0; pi < grads.primitives.size(); ++pi) {
    const PrimitiveGrads& pg = grads.primitives[pi];
    bool ok = pg.d_mean.allFinite() && pg.d_log_scale.allFinite() &&
              pg.d_rotation.allFinite() && std::isfinite(pg.d_opacity_logit);
    for (double v : pg.d_sh) ok = ok && std::isfinite(v);
    if (!ok) {
      throw std::runtime_error("render_backward: non-finite gradient for primitive " +
                               std::to_string(pi));
    }
  }
  return grads;
}

}  // namespace splatinit::detail
