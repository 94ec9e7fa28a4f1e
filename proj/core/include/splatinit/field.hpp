// SPDX-License-Identifier: Apache-2.0
// Desk-scale volumetric radiance field: a dense trilinear density/color grid
// with volume rendering, ray-termination statistics, inverse-CDF point
// sampling, depth accumulation, and a photometric trainer.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "splatinit/geometry.hpp"
#include "splatinit/image.hpp"
#include "splatinit/point_cloud.hpp"
#include "splatinit/types.hpp"

namespace splatinit {

struct Dataset;  // defined in splatinit/dataset.hpp

// Rays whose total termination mass falls at or below this floor are
// rejected by the point sampler: the termination CDF is ill-conditioned on
// near-empty rays.
constexpr double kAlphaFloor = 0.01;

// Dense trilinear grid over an axis-aligned box. Nodes sit at the corners of
// a (nx-1) x (ny-1) x (nz-1) cell lattice spanning `bounds` inclusively, laid
// out x-fastest. `density` holds sigma >= 0 (units 1/world-length); `color`
// holds RGB per node in [0, 1].
struct VoxelField {
  Eigen::Vector3i resolution = Eigen::Vector3i::Zero();
  Aabb bounds;
  std::vector<double> density;
  std::vector<double> color;

  VoxelField() = default;
  // Zero-density, black field. Requires resolution >= 2 per axis and bounds
  // with positive extent on every axis (throws std::invalid_argument).
  VoxelField(const Eigen::Vector3i& resolution, const Aabb& bounds);

  std::size_t node_count() const {
    return static_cast<std::size_t>(resolution.x()) * resolution.y() * resolution.z();
  }
  std::size_t node_index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * resolution.y() + iy) * resolution.x() + ix;
  }
  Vec3 node_position(int ix, int iy, int iz) const;
  // World-space edge length of one grid cell per axis.
  Vec3 cell_size() const;
};

struct FieldSample {
  double density = 0.0;
  Vec3 color = Vec3::Zero();
};

// Trilinear interpolation of density and color at x. Points outside the
// bounds return zero density and black, so any finite x is a valid query.
FieldSample sample_field(const VoxelField& field, const Vec3& x);

// Per-ray termination statistics from stratified uniform quadrature:
// ts holds the N+1 interval edges over the sampled span (the ray range
// clipped to the field bounds — see march_ray); for each interval,
// density is sampled at the midpoint, a_i = 1 - exp(-sigma_i d_i),
// T_i = prod_{j<i}(1 - a_j), and weights w_i = T_i a_i. cdf stores prefix
// sums W_i, total_alpha = W_N, and accumulated_depth = sum of midpoint * w_i.
struct TerminationProfile {
  Ray ray;
  std::vector<double> ts;
  std::vector<double> weights;
  std::vector<double> cdf;
  double accumulated_depth = 0.0;
  double total_alpha = 0.0;

  int interval_count() const { return static_cast<int>(weights.size()); }
  double interval_midpoint(int i) const { return 0.5 * (ts[i] + ts[i + 1]); }
};

// Intersects [ray.t_min, ray.t_max] with an axis-aligned box, writing the
// clipped range to lo/hi. False when the overlap is empty.
bool clip_ray_to_bounds(const Aabb& bounds, const Ray& ray, double& lo, double& hi);

// Marches `ray` through the field with n_samples uniform intervals spanning
// the part of the ray range inside the field bounds (the field is empty
// outside, so this only refines the quadrature; rays that miss the bounds
// keep their own range and get all-zero weights).
// Requires n_samples >= 2 and a finite, non-empty [t_min, t_max].
TerminationProfile march_ray(const VoxelField& field, const Ray& ray, int n_samples);

// Piecewise-linear evaluation of the termination CDF W(t).
double cdf_at(const TerminationProfile& profile, double t);

// Maps u in [0, 1] to the depth t with W(t) = u * total_alpha by locating
// the interval holding the target mass and interpolating linearly within it;
// monotone in u, and u = 0 returns the left edge of the first interval with
// positive weight. Returns nullopt ("ray rejected") when total_alpha is at
// or below alpha_floor.
std::optional<double> inverse_cdf_sample(const TerminationProfile& profile, double u,
                                         double alpha_floor = kAlphaFloor);

// Termination-weighted mean depth of the ray (zero for an empty ray).
double field_depth(const VoxelField& field, const Ray& ray, int n_samples);

struct PointSamplingConfig {
  int n_samples = 192;
  double alpha_floor = kAlphaFloor;
};

// Draws n_points samples of the fields' ray-termination distribution: rays
// are chosen uniformly over all pixels of all cameras, each accepted ray
// contributes one depth drawn through the inverse CDF, and the point takes
// the field color at its position (exactly sample_field(position).color).
// Deterministic given seed. Throws std::runtime_error("degenerate field...")
// when every probed ray is rejected.
PointCloud sample_point_cloud(const VoxelField& field, const std::vector<Camera>& cameras,
                              int n_points, std::uint64_t seed,
                              const PointSamplingConfig& config = {});

struct FieldRender {
  Image color;  // H x W x 3
  Image depth;  // H x W x 1, termination-weighted mean depth
  Image alpha;  // H x W x 1, total termination mass
};

// Reference volume renderer: marches every pixel-center ray and composites
// C = sum c_i w_i + (1 - W_N) * background. Deterministic; parallel over rows.
FieldRender render_field(const VoxelField& field, const Camera& camera, int n_samples,
                         const Vec3& background = Vec3::Zero());

// Photometric loss and its exact gradients with respect to the stored node
// densities and colors, for a batch of rays with ground-truth colors.
// loss = mean over rays of |composite - gt|^2 summed over channels.
struct FieldGradients {
  double loss = 0.0;
  std::vector<double> d_density;
  std::vector<double> d_color;
};
FieldGradients field_photometric_gradients(const VoxelField& field, const std::vector<Ray>& rays,
                                           const std::vector<Vec3>& gt_colors, int n_samples,
                                           const Vec3& background = Vec3::Zero());

struct FieldTrainConfig {
  int iters = 2000;
  double lr = 0.05;
  int rays_per_iter = 1024;
  int n_samples = 96;
  std::uint64_t seed = 0;
  Vec3 background = Vec3::Zero();
  // Adam moment decays; standard values.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int log_every = 0;  // 0 = silent; otherwise prints loss every k iters
  // Trainability floors applied when entering training: densities below the
  // floor start at it, and colors are pulled into [margin, 1 - margin].
  // Exactly zero density or color sits in the saturated tail of its
  // reparameterization (softplus / logistic) where gradients vanish, so a
  // blank field could never start learning without these.
  double init_density_floor = 0.05;
  double init_color_margin = 0.1;
};

// Trains the field against the dataset's training views by minimizing the
// mean squared photometric error of composited ray colors. Density is
// optimized through a softplus reparameterization and color through a
// logistic one, so the field invariants (sigma >= 0, color in [0,1]) hold
// after every step. Returns the trained field; iters = 0 returns the input
// unchanged. Throws std::runtime_error on a non-finite loss.
VoxelField train_field(const VoxelField& field, const Dataset& dataset,
                       const FieldTrainConfig& config);

}  // namespace splatinit
