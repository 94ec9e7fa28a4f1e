// SPDX-License-Identifier: Apache-2.0
#include "splatinit/distill.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "splatinit/metrics.hpp"

namespace splatinit {

double lambda_schedule(int iter, const DistillConfig& config) {
  if (iter < 0) {
    throw std::invalid_argument("lambda_schedule: iteration must be non-negative");
  }
  if (config.decay_step <= 0) {
    throw std::invalid_argument("lambda_schedule: decay_step must be positive");
  }
  if (config.lambda_init == 0.0) {
    return 0.0;
  }
  const double exponent = static_cast<double>(iter) / static_cast<double>(config.decay_step);
  return config.lambda_init * std::pow(config.decay, exponent);
}

DepthSupervision precompute_depth_supervision(const VoxelField& field,
                                              const std::vector<Camera>& cameras,
                                              int n_samples, double depth_mask_alpha) {
  DepthSupervision out;
  out.depth.reserve(cameras.size());
  out.valid.reserve(cameras.size());
  for (const Camera& camera : cameras) {
    FieldRender fr = render_field(field, camera, n_samples);
    Image valid(fr.alpha.width, fr.alpha.height, 1);
    for (std::size_t i = 0; i < fr.alpha.data.size(); ++i) {
      valid.data[i] = fr.alpha.data[i] >= depth_mask_alpha ? 1.0 : 0.0;
    }
    out.depth.push_back(std::move(fr.depth));
    out.valid.push_back(std::move(valid));
  }
  return out;
}

LossGsResult loss_gs(const RenderOutput& render, const Image& gt, double ssim_weight,
                     const SsimReference* gt_ref) {
  const Image& img = render.color;
  if (!img.same_shape(gt) || img.channels != 3) {
    throw std::domain_error("loss_gs: rendered and ground-truth images must be matching HxWx3");
  }
  if (!(ssim_weight >= 0.0 && ssim_weight <= 1.0)) {
    throw std::invalid_argument("loss_gs: ssim_weight must lie in [0, 1]");
  }

  LossGsResult out;
  out.d_color = Image(img.width, img.height, 3);
  const double inv_n = 1.0 / static_cast<double>(img.data.size());
  const double l1_coeff = (1.0 - ssim_weight) * inv_n;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double diff = img.data[i] - gt.data[i];
    abs_sum += std::abs(diff);
    // Subgradient 0 at exact ties.
    out.d_color.data[i] = diff > 0.0 ? l1_coeff : (diff < 0.0 ? -l1_coeff : 0.0);
  }
  out.l1 = abs_sum * inv_n;

  if (ssim_weight > 0.0) {
    SsimGradResult sg =
        gt_ref ? ssim_with_gradient(img, *gt_ref) : ssim_with_gradient(img, gt);
    out.ssim_value = sg.value;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      out.d_color.data[i] -= ssim_weight * sg.d_a.data[i];
    }
  }
  out.value = (1.0 - ssim_weight) * out.l1 + ssim_weight * (1.0 - out.ssim_value);
  return out;
}

LossDepthResult loss_depth(const RenderOutput& render, const Image& sup_depth,
                           const Image& sup_valid, double depth_mask_alpha) {
  const Image& depth = render.depth;
  if (depth.channels != 1 || !depth.same_shape(sup_depth) || !depth.same_shape(sup_valid) ||
      !depth.same_shape(render.alpha)) {
    throw std::domain_error("loss_depth: depth, supervision and mask images must be matching HxWx1");
  }

  LossDepthResult out;
  out.d_depth = Image(depth.width, depth.height, 1);
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    if (sup_valid.data[i] == 0.0 || render.alpha.data[i] < depth_mask_alpha) {
      continue;
    }
    ++out.valid_count;
    const double diff = depth.data[i] - sup_depth.data[i];
    abs_sum += std::abs(diff);
    out.d_depth.data[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  }
  if (out.valid_count == 0) {
    return out;  // value 0, zero gradient; the caller records the warning
  }
  const double inv_n = 1.0 / static_cast<double>(out.valid_count);
  out.value = abs_sum * inv_n;
  for (double& g : out.d_depth.data) {
    g *= inv_n;
  }
  return out;
}

namespace {

// One position draw from the primitive's own distribution: mean + R S n.
Vec3 footprint_offset(const GaussianPrimitive& prim, Rng& rng) {
  const Vec3 n(rng.normal(), rng.normal(), rng.normal());
  const Mat3 r = rotation_matrix(prim.rotation);
  const Vec3 scaled = prim.log_scale.array().exp() * n.array();
  return r * scaled;
}

}  // namespace

GaussianScene densify_and_prune(const GaussianScene& scene, const DensifyStats& stats,
                                const DistillConfig& config, double scene_extent, Rng& rng,
                                std::vector<int>* parent_of) {
  const std::size_t n = scene.primitives.size();
  if (stats.grad_norm_sum.size() != n || stats.grad_count.size() != n ||
      stats.max_radius_px.size() != n) {
    throw std::invalid_argument("densify_and_prune: statistics size does not match the scene");
  }
  if (!(scene_extent > 0.0)) {
    throw std::invalid_argument("densify_and_prune: scene_extent must be positive");
  }

  const double split_scale_threshold = config.percent_dense * scene_extent;
  const double log_split_shrink = std::log(1.6);

  GaussianScene out;
  out.background = scene.background;
  out.sh_degree = scene.sh_degree;
  out.primitives.reserve(n);
  std::vector<GaussianPrimitive> additions;
  if (parent_of != nullptr) {
    parent_of->clear();
  }

  for (std::size_t i = 0; i < n; ++i) {
    const GaussianPrimitive& prim = scene.primitives[i];
    if (prim.opacity() < config.prune_opacity_threshold) {
      continue;  // pruned; any densification candidacy dies with it
    }

    const double avg_grad =
        stats.grad_count[i] > 0 ? stats.grad_norm_sum[i] / stats.grad_count[i] : 0.0;
    const bool wants_densify = avg_grad >= config.densify_grad_threshold;
    const double max_scale = prim.log_scale.array().exp().maxCoeff();

    if (wants_densify && max_scale > split_scale_threshold) {
      // Split: the parent is replaced by two shrunken copies, each centred
      // at a sample from the parent's distribution.
      for (int child = 0; child < 2; ++child) {
        GaussianPrimitive c = prim;
        c.mean = prim.mean + footprint_offset(prim, rng);
        c.log_scale = prim.log_scale.array() - log_split_shrink;
        additions.push_back(std::move(c));
      }
      continue;
    }

    out.primitives.push_back(prim);
    if (parent_of != nullptr) {
      parent_of->push_back(static_cast<int>(i));
    }

    if (wants_densify) {
      // Clone: one extra copy, shifted by one sampled offset within the
      // parent's footprint.
      GaussianPrimitive c = prim;
      c.mean = prim.mean + footprint_offset(prim, rng);
      additions.push_back(std::move(c));
    }
  }

  const std::size_t cap = static_cast<std::size_t>(std::max(config.max_primitives, 0));
  for (GaussianPrimitive& prim : additions) {
    if (out.primitives.size() >= cap) {
      break;
    }
    out.primitives.push_back(std::move(prim));
    if (parent_of != nullptr) {
      parent_of->push_back(-1);
    }
  }
  return out;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) {
    throw std::runtime_error("write_metrics_csv: cannot open " + path);
  }
  std::fputs("iter,loss_total,loss_gs,loss_depth,lambda,n_primitives,train_psnr\n", f);
  for (const MetricsRow& row : rows) {
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", row.iter, row.loss_total,
                 row.loss_gs, row.loss_depth, row.lambda, row.n_primitives, row.train_psnr);
  }
  if (std::fclose(f) != 0) {
    throw std::runtime_error("write_metrics_csv: write failed for " + path);
  }
}

}  // namespace splatinit
