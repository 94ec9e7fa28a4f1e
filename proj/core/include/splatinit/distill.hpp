// SPDX-License-Identifier: Apache-2.0
// Gaussian-splat training: photometric loss, optional depth supervision
// distilled from a voxel field with a decaying weight, and periodic
// clone/split/prune density control.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatinit/dataset.hpp"
#include "splatinit/field.hpp"
#include "splatinit/metrics.hpp"
#include "splatinit/rng.hpp"
#include "splatinit/splat.hpp"

namespace splatinit {

struct DistillConfig {
  // Depth-supervision weight schedule: lambda(i) = lambda_init * decay^(i / step).
  double lambda_init = 0.9;
  double decay = 0.9;
  int decay_step = 100;

  int total_iters = 3000;

  // Per-group learning rates (Adam). The position rate is multiplied by the
  // camera-bbox largest extent so it is expressed in scene-relative units.
  double lr_position = 0.00016;
  double lr_scale = 0.005;
  double lr_rotation = 0.001;
  double lr_opacity = 0.05;
  double lr_color = 0.0025;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-15;

  // Density control. Gradient statistics are screen-space mean-gradient
  // norms in NDC units averaged between densification rounds.
  int densify_interval = 100;
  int densify_start = 300;
  int densify_end = 2400;
  double densify_grad_threshold = 0.0002;
  double prune_opacity_threshold = 0.005;
  int max_primitives = 100000;
  // Primitives whose largest scale is below this fraction of the scene
  // extent are cloned; larger ones are split.
  double percent_dense = 0.01;
  // Optional single reset: at this iteration every opacity is clamped down
  // to at most 0.01 and the opacity optimizer state restarts (0 = off).
  int opacity_reset_iter = 0;

  // Loss shape: (1 - ssim_weight) * L1 + ssim_weight * (1 - SSIM).
  double ssim_weight = 0.2;
  // A ray contributes to the depth loss only when both the field's
  // total_alpha and the rendered alpha reach this value.
  double depth_mask_alpha = 0.5;
  // Samples per ray when precomputing field depth supervision.
  int field_samples = 192;

  std::uint64_t seed = 0;
  bool deterministic = true;  // recorded in logs; the pipeline is always
                              // deterministic for a fixed thread count
  int checkpoint_interval = 0;  // save GSPL every k iterations (0 = off)
  std::string checkpoint_dir;   // also receives the dump on aborts

  Vec3 background = Vec3::Zero();
  RenderConfig render;
};

// lambda_init * decay^(i / step) with a real-valued exponent; requires i >= 0.
double lambda_schedule(int iter, const DistillConfig& config);

// Precomputed per-training-view depth supervision: the field's
// termination-weighted depth and a validity mask (total_alpha >= threshold).
struct DepthSupervision {
  std::vector<Image> depth;  // one 1-channel image per supervised camera
  std::vector<Image> valid;  // 1.0 where the field depth is trustworthy
};

DepthSupervision precompute_depth_supervision(const VoxelField& field,
                                              const std::vector<Camera>& cameras,
                                              int n_samples, double depth_mask_alpha);

struct LossGsResult {
  double value = 0.0;
  double l1 = 0.0;
  double ssim_value = 1.0;
  Image d_color;  // gradient with respect to the rendered color image
};

// (1 - w) * mean|diff| + w * (1 - SSIM), with the exact gradient image.
// Throws std::domain_error on shape mismatch. `gt_ref`, when given, must be
// make_ssim_reference(gt); it skips recomputing the ground-truth moments.
LossGsResult loss_gs(const RenderOutput& render, const Image& gt, double ssim_weight,
                     const SsimReference* gt_ref = nullptr);

struct LossDepthResult {
  double value = 0.0;
  Image d_depth;        // gradient with respect to the rendered depth image
  int valid_count = 0;  // pixels that passed both masks (0 raised a warning)
};

// Mean |D_render - D_field| over pixels where both the supervision mask and
// the rendered alpha pass the threshold; subgradient 0 at exact ties. An
// empty mask yields value 0 and valid_count 0 (callers count warnings).
LossDepthResult loss_depth(const RenderOutput& render, const Image& sup_depth,
                           const Image& sup_valid, double depth_mask_alpha);

// Accumulated per-primitive statistics between densification rounds.
struct DensifyStats {
  std::vector<double> grad_norm_sum;  // summed NDC mean2d gradient norms
  std::vector<int> grad_count;        // backward passes the primitive was visible in
  std::vector<double> max_radius_px;  // largest observed screen footprint
};

// Clones small / splits large primitives whose average positional gradient
// reaches the threshold (split scales shrink by 1.6 and replace the parent),
// prunes primitives below the opacity threshold, and caps the total count.
// `parent_of` (when given) receives, per output primitive, the index of the
// surviving source primitive or -1 for newly created ones, so optimizer
// state can be carried over.
GaussianScene densify_and_prune(const GaussianScene& scene, const DensifyStats& stats,
                                const DistillConfig& config, double scene_extent, Rng& rng,
                                std::vector<int>* parent_of = nullptr);

struct MetricsRow {
  int iter = 0;
  double loss_total = 0.0;
  double loss_gs = 0.0;
  double loss_depth = 0.0;
  double lambda = 0.0;
  int n_primitives = 0;
  double train_psnr = 0.0;
};

// CSV with header iter,loss_total,loss_gs,loss_depth,lambda,n_primitives,train_psnr.
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

struct TrainSplatResult {
  GaussianScene scene;
  std::vector<MetricsRow> log;
  int depth_warning_count = 0;  // iterations whose depth mask was empty
};

// Trains the scene on the dataset's training views: each iteration renders
// one camera (round-robin over a seed-shuffled order), applies the
// photometric loss plus lambda(i) times the depth loss when `field` is
// given and lambda_init > 0, steps Adam per parameter group, renormalizes
// quaternions, and periodically densifies/prunes. With lambda_init = 0 the
// depth machinery is fully inert and logs are identical with or without a
// field. Throws std::runtime_error on non-finite loss (after dumping a
// checkpoint when checkpoint_dir is set).
TrainSplatResult train_splat(const GaussianScene& initial, const Dataset& dataset,
                             const VoxelField* field, const DistillConfig& config);

}  // namespace splatinit
