#include <cmath>

#include "raster_internal.hpp"
#include "splatinit/parallel.hpp"

namespace splatinit::detail {

RenderOutput raster_forward(const GaussianScene& scene, const RasterContext& ctx,
                            const RenderConfig& config) {
  RenderOutput out;
  out.color = Image(ctx.width, ctx.height, 3);
  out.depth = Image(ctx.width, ctx.height, 1);
  out.alpha = Image(ctx.width, ctx.height, 1);
  const Vec3 bg = scene.background;
  const double log_min = std::log(config.min_contribution);
  const int* offsets = ctx.offsets.data();
  const int* entries = ctx.entries.data();
  const double* dirs = ctx.pixel_dirs.data();
  const double* quads = ctx.pixel_quad.data();
  const double* test_data = ctx.test_data.data();
  const double* comp_data = ctx.comp_data.data();

  parallel_for_slices(static_cast<size_t>(ctx.height), [&](size_t, size_t row_begin,
                                                           size_t row_end) {
    for (size_t y = row_begin; y < row_end; ++y) {
      double* color_row = &out.color.data[y * ctx.width * 3];
      double* depth_row = &out.depth.data[y * ctx.width];
      double* alpha_row = &out.alpha.data[y * ctx.width];
      for (int x = 0; x < ctx.width; ++x) {
        const size_t pix = y * ctx.width + x;
        const double px = x + 0.5, py = y + 0.5;
        const double* v = dirs + pix * 3;
        const double* q = quads + pix * 6;
        double c0 = 0.0, c1 = 0.0, c2 = 0.0, depth = 0.0, trans = 1.0;
        const int e_end = offsets[pix + 1];
        for (int e = offsets[pix]; e < e_end; ++e) {
          const int ai = entries[e];
          const double* td = test_data + ai * RasterContext::kTestStride;
          const double dx = px - td[0], dy = py - td[1];
          const double power = -0.5 * (td[2] * dx * dx + 2.0 * td[3] * dx * dy + td[4] * dy * dy);
          if (power > 0.0 || power < log_min) continue;
          const double gauss = std::exp(power);
          double a_hat = td[5] * gauss;
          if (a_hat < config.min_contribution) continue;
          if (a_hat > config.max_contribution) a_hat = config.max_contribution;
          // Closed-form depth of this primitive along the pixel ray; behind
          // or at the camera center means no contribution for this pixel.
          const double* cd = comp_data + ai * RasterContext::kCompStride;
          const double numer = cd[3] * v[0] + cd[4] * v[1] + cd[5] * v[2];
          const double denom = cd[6] * q[0] + cd[7] * q[1] + cd[8] * q[2] + cd[9] * q[3] +
                               cd[10] * q[4] + cd[11] * q[5];
          const double d = -numer / denom;
          if (!(d > 0.0)) continue;
          const double w = a_hat * trans;
          c0 += w * cd[0];
          c1 += w * cd[1];
          c2 += w * cd[2];
          depth += w * d;
          trans *= 1.0 - a_hat;
          if (trans < config.transmittance_floor) break;
        }
        color_row[x * 3] = c0 + trans * bg[0];
        color_row[x * 3 + 1] = c1 + trans * bg[1];
        color_row[x * 3 + 2] = c2 + trans * bg[2];
        depth_row[x] = depth;
        alpha_row[x] = 1.0 - trans;
      }
    }
  });
  return out;
}

}  // namespace splatinit::detail
