// SPDX-License-Identifier: Apache-2.0
// Training loop for the Gaussian-splat renderer: per-group Adam on the
// primitive parameters, optional field-distilled depth supervision with a
// decaying weight, and periodic densification.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "raster_internal.hpp"
#include "splatinit/checkpoint.hpp"
#include "splatinit/distill.hpp"
#include "splatinit/metrics.hpp"

namespace splatinit {

namespace {

constexpr int kGroupCount = 5;  // position, scale, rotation, opacity, color

struct ParamGroup {
  int width = 0;
  double lr = 0.0;
  std::vector<double> m;
  std::vector<double> v;
};

struct Optimizer {
  ParamGroup groups[kGroupCount];
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
  int t = 0;  // completed steps, for bias correction

  void resize(std::size_t n) {
    for (ParamGroup& g : groups) {
      g.m.assign(n * g.width, 0.0);
      g.v.assign(n * g.width, 0.0);
    }
  }

  // Keeps the moment rows of surviving primitives and zeroes new ones.
  void remap(const std::vector<int>& parent_of) {
    for (ParamGroup& g : groups) {
      std::vector<double> m(parent_of.size() * g.width, 0.0);
      std::vector<double> v(parent_of.size() * g.width, 0.0);
      for (std::size_t j = 0; j < parent_of.size(); ++j) {
        const int p = parent_of[j];
        if (p < 0) {
          continue;
        }
        for (int k = 0; k < g.width; ++k) {
          m[j * g.width + k] = g.m[static_cast<std::size_t>(p) * g.width + k];
          v[j * g.width + k] = g.v[static_cast<std::size_t>(p) * g.width + k];
        }
      }
      g.m = std::move(m);
      g.v = std::move(v);
    }
  }

  void apply(ParamGroup& g, std::size_t prim, double* param, const double* grad,
             double bias1, double bias2) {
    double* m = g.m.data() + prim * g.width;
    double* v = g.v.data() + prim * g.width;
    for (int k = 0; k < g.width; ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
      param[k] -= g.lr * (m[k] / bias1) / (std::sqrt(v[k] / bias2) + eps);
    }
  }

  void step(GaussianScene& scene, const SceneGrads& grads) {
    ++t;
    const double bias1 = 1.0 - std::pow(beta1, t);
    const double bias2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
      GaussianPrimitive& p = scene.primitives[i];
      const PrimitiveGrads& g = grads.primitives[i];
      apply(groups[0], i, p.mean.data(), g.d_mean.data(), bias1, bias2);
      apply(groups[1], i, p.log_scale.data(), g.d_log_scale.data(), bias1, bias2);
      apply(groups[2], i, p.rotation.data(), g.d_rotation.data(), bias1, bias2);
      apply(groups[3], i, &p.opacity_logit, &g.d_opacity_logit, bias1, bias2);
      apply(groups[4], i, p.sh.data(), g.d_sh.data(), bias1, bias2);
    }
  }
};

void renormalize_rotations(GaussianScene& scene) {
  for (GaussianPrimitive& p : scene.primitives) {
    const double norm = p.rotation.norm();
    if (norm > 1e-12) {
      p.rotation /= norm;
    } else {
      p.rotation = Vec4(1.0, 0.0, 0.0, 0.0);
    }
  }
}

std::filesystem::path checkpoint_path(const std::string& dir, int iter) {
  char name[32];
  std::snprintf(name, sizeof(name), "iter_%06d.gspl", iter);
  return std::filesystem::path(dir) / name;
}

}  // namespace

TrainSplatResult train_splat(const GaussianScene& initial, const Dataset& dataset,
                             const VoxelField* field, const DistillConfig& config) {
  TrainSplatResult result;
  result.scene = initial;
  if (config.total_iters <= 0) {
    return result;  // unchanged scene, empty log
  }
  if (dataset.train_indices.empty()) {
    throw std::invalid_argument("train_splat: dataset has no training views");
  }
  if (config.densify_interval <= 0) {
    throw std::invalid_argument("train_splat: densify_interval must be positive");
  }

  GaussianScene& scene = result.scene;
  scene.background = config.background;
  const int sh_width = 3 * scene.sh_coeff_count();

  // Views in dataset order; iteration order is a seed-shuffled ring.
  std::vector<int> views = dataset.train_indices;
  Rng rng(config.seed);
  for (std::size_t i = views.size(); i > 1; --i) {
    std::swap(views[i - 1], views[rng.uniform_index(i)]);
  }

  const std::vector<Camera> train_cams = dataset.train_cameras();
  double scene_extent = camera_bbox(train_cams).largest_extent();
  if (!(scene_extent > 0.0)) {
    scene_extent = 1.0;
  }

  const bool depth_on = field != nullptr && config.lambda_init != 0.0;
  DepthSupervision supervision;
  if (depth_on) {
    supervision = precompute_depth_supervision(*field, train_cams, config.field_samples,
                                               config.depth_mask_alpha);
  }
  // Maps a dataset view index to its row in `supervision`.
  std::vector<int> train_slot(dataset.cameras.size(), -1);
  for (std::size_t i = 0; i < dataset.train_indices.size(); ++i) {
    train_slot[static_cast<std::size_t>(dataset.train_indices[i])] = static_cast<int>(i);
  }

  Optimizer opt;
  opt.beta1 = config.adam_beta1;
  opt.beta2 = config.adam_beta2;
  opt.eps = config.adam_eps;
  opt.groups[0] = {3, config.lr_position * scene_extent, {}, {}};
  opt.groups[1] = {3, config.lr_scale, {}, {}};
  opt.groups[2] = {4, config.lr_rotation, {}, {}};
  opt.groups[3] = {1, config.lr_opacity, {}, {}};
  opt.groups[4] = {sh_width, config.lr_color, {}, {}};
  opt.resize(scene.primitives.size());

  DensifyStats stats;
  auto reset_stats = [&stats](std::size_t n) {
    stats.grad_norm_sum.assign(n, 0.0);
    stats.grad_count.assign(n, 0);
    stats.max_radius_px.assign(n, 0.0);
  };
  reset_stats(scene.primitives.size());

  result.log.reserve(static_cast<std::size_t>(config.total_iters));
  // Per-view reusable state: raster contexts keep their per-pixel ray tables,
  // and the ground-truth SSIM moments never change.
  std::vector<detail::RasterContext> contexts(views.size());
  std::vector<SsimReference> gt_refs;
  if (config.ssim_weight > 0.0) {
    gt_refs.reserve(views.size());
    for (const int view : views) {
      gt_refs.push_back(make_ssim_reference(dataset.images[static_cast<std::size_t>(view)]));
    }
  }

  for (int iter = 0; iter < config.total_iters; ++iter) {
    const std::size_t slot = static_cast<std::size_t>(iter) % views.size();
    const int view = views[slot];
    const Camera& camera = dataset.cameras[static_cast<std::size_t>(view)];
    const Image& gt = dataset.images[static_cast<std::size_t>(view)];

    detail::RasterContext& ctx = contexts[slot];
    detail::prepare_raster(scene, camera, config.render, ctx);
    const RenderOutput render = detail::raster_forward(scene, ctx, config.render);

    LossGsResult lg =
        loss_gs(render, gt, config.ssim_weight, gt_refs.empty() ? nullptr : &gt_refs[slot]);
    const double lambda = lambda_schedule(iter, config);

    double depth_value = 0.0;
    Image d_depth(render.depth.width, render.depth.height, 1);
    if (depth_on) {
      const int slot = train_slot[static_cast<std::size_t>(view)];
      LossDepthResult ld = loss_depth(render, supervision.depth[static_cast<std::size_t>(slot)],
                                      supervision.valid[static_cast<std::size_t>(slot)],
                                      config.depth_mask_alpha);
      if (ld.valid_count == 0) {
        ++result.depth_warning_count;
      }
      depth_value = ld.value;
      d_depth = std::move(ld.d_depth);
      for (double& g : d_depth.data) {
        g *= lambda;
      }
    }

    const double total = lg.value + lambda * depth_value;
    if (!std::isfinite(total)) {
      std::string dumped;
      if (!config.checkpoint_dir.empty()) {
        std::filesystem::create_directories(config.checkpoint_dir);
        const auto path = std::filesystem::path(config.checkpoint_dir) / "abort.gspl";
        save_scene(scene, path.string());
        dumped = "; scene dumped to " + path.string();
      }
      throw std::runtime_error("train_splat: non-finite loss at iteration " +
                               std::to_string(iter) + dumped);
    }

    const SceneGrads grads = detail::raster_backward(scene, ctx, lg.d_color, d_depth,
                                                     config.render);
    opt.step(scene, grads);
    renormalize_rotations(scene);

    for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
      if (grads.radius_px[i] > 0.0) {
        stats.grad_norm_sum[i] += grads.mean2d_grad_norm[i];
        stats.grad_count[i] += 1;
        stats.max_radius_px[i] = std::max(stats.max_radius_px[i], grads.radius_px[i]);
      }
    }

    result.log.push_back({iter, total, lg.value, depth_value, lambda,
                          static_cast<int>(scene.primitives.size()),
                          psnr(render.color, gt)});

    if (config.opacity_reset_iter > 0 && iter == config.opacity_reset_iter) {
      const double cap_logit = std::log(0.01 / 0.99);
      for (GaussianPrimitive& p : scene.primitives) {
        p.opacity_logit = std::min(p.opacity_logit, cap_logit);
      }
      std::fill(opt.groups[3].m.begin(), opt.groups[3].m.end(), 0.0);
      std::fill(opt.groups[3].v.begin(), opt.groups[3].v.end(), 0.0);
    }

    if (iter % config.densify_interval == 0 && iter >= config.densify_start &&
        iter <= config.densify_end) {
      std::vector<int> parent_of;
      scene = densify_and_prune(scene, stats, config, scene_extent, rng, &parent_of);
      opt.remap(parent_of);
      reset_stats(scene.primitives.size());
    }

    if (config.checkpoint_interval > 0 && !config.checkpoint_dir.empty() &&
        (iter + 1) % config.checkpoint_interval == 0) {
      std::filesystem::create_directories(config.checkpoint_dir);
      save_scene(scene, checkpoint_path(config.checkpoint_dir, iter + 1).string());
    }
  }
  return result;
}

}  // namespace splatinit
