// SPDX-License-Identifier: Apache-2.0
// Photometric gradients and the Adam trainer for the voxel field.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "splatinit/dataset.hpp"
#include "splatinit/field.hpp"
#include "splatinit/parallel.hpp"
#include "splatinit/rng.hpp"

namespace splatinit {
namespace {

double softplus(double s) { return s > 30.0 ? s : std::log1p(std::exp(s)); }
double softplus_inv(double sigma) { return std::log(std::expm1(std::max(sigma, 1e-8))); }
double sigmoid(double y) { return 1.0 / (1.0 + std::exp(-y)); }
double logit(double c) {
  const double p = std::clamp(c, 1e-6, 1.0 - 1e-6);
  return std::log(p / (1.0 - p));
}

// Fused forward/backward for one ray. Adds the ray's squared-error loss
// (summed over channels) times `scale` to the returned value and scatters
// gradient contributions, also scaled by `scale`, into d_density / d_color.
double ray_loss_and_grad(const VoxelField& field, const Ray& ray, const Vec3& gt, int n_samples,
                         const Vec3& background, double scale, double* d_density,
                         double* d_color) {
  // Same clipped span as march_ray, so the quadrature concentrates inside
  // the grid instead of spending samples on provably empty space.
  double t_lo = ray.t_min, t_hi = ray.t_max;
  if (!clip_ray_to_bounds(field.bounds, ray, t_lo, t_hi)) {
    t_lo = ray.t_min;
    t_hi = ray.t_max;
  }
  const double dt = (t_hi - t_lo) / n_samples;

  // Forward: per-interval stencil, density, color, weight.
  struct Sample {
    FieldSample fs;
    double alpha;
    double weight;
    double trans;  // transmittance on entry, T_i
    std::size_t idx[8];
    double w[8];
    bool inside;
  };
  thread_local std::vector<Sample> samples;
  samples.resize(n_samples);

  double transmittance = 1.0;
  Vec3 composite = Vec3::Zero();
  double total = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    Sample& s = samples[i];
    const Vec3 x = ray.at(t_lo + dt * (i + 0.5));
    s.fs = FieldSample{};
    s.inside = false;
    if (field.bounds.contains(x)) {
      // Inline stencil gather so forward and backward share exact weights.
      const Vec3 ext = field.bounds.extent();
      int ix[3];
      double fx[3];
      for (int a = 0; a < 3; ++a) {
        const int n = field.resolution[a];
        double u = (x[a] - field.bounds.min[a]) / ext[a] * (n - 1);
        int c = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
        ix[a] = c;
        fx[a] = u - c;
      }
      int k = 0;
      for (int dz = 0; dz < 2; ++dz) {
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx, ++k) {
            s.idx[k] = field.node_index(ix[0] + dx, ix[1] + dy, ix[2] + dz);
            s.w[k] = (dx ? fx[0] : 1.0 - fx[0]) * (dy ? fx[1] : 1.0 - fx[1]) *
                     (dz ? fx[2] : 1.0 - fx[2]);
            s.fs.density += s.w[k] * field.density[s.idx[k]];
            const double* c3 = &field.color[s.idx[k] * 3];
            s.fs.color.x() += s.w[k] * c3[0];
            s.fs.color.y() += s.w[k] * c3[1];
            s.fs.color.z() += s.w[k] * c3[2];
          }
        }
      }
      s.inside = true;
    }
    s.alpha = 1.0 - std::exp(-s.fs.density * dt);
    s.trans = transmittance;
    s.weight = transmittance * s.alpha;
    composite += s.weight * s.fs.color;
    total += s.weight;
    transmittance *= 1.0 - s.alpha;
  }
  composite += (1.0 - total) * background;

  const Vec3 diff = composite - gt;
  const double loss = scale * diff.squaredNorm();
  const Vec3 d_composite = 2.0 * scale * diff;

  // Backward: d loss / d sigma_i = dt * (gw_i * T_{i+1} - suffix_i) with
  // gw_i = dC . (c_i - bg), suffix_i = sum_{j>i} gw_j w_j; colors are linear.
  // T_{i+1} = T_i (1 - a_i) comes from stored forward values rather than
  // back-division, which would lose early-sample gradients to underflow on
  // opaque rays.
  double suffix = 0.0;
  for (int i = n_samples - 1; i >= 0; --i) {
    const Sample& s = samples[i];
    const double gw = d_composite.dot(s.fs.color - background);
    const double d_sigma = dt * (gw * s.trans * (1.0 - s.alpha) - suffix);
    suffix += gw * s.weight;

    if (!s.inside) continue;
    if (d_sigma != 0.0) {
      for (int k = 0; k < 8; ++k) d_density[s.idx[k]] += s.w[k] * d_sigma;
    }
    if (s.weight > 0.0) {
      for (int k = 0; k < 8; ++k) {
        double* c3 = &d_color[s.idx[k] * 3];
        const double ww = s.w[k] * s.weight;
        c3[0] += ww * d_composite.x();
        c3[1] += ww * d_composite.y();
        c3[2] += ww * d_composite.z();
      }
    }
  }
  return loss;
}

}  // namespace

FieldGradients field_photometric_gradients(const VoxelField& field, const std::vector<Ray>& rays,
                                           const std::vector<Vec3>& gt_colors, int n_samples,
                                           const Vec3& background) {
  if (rays.size() != gt_colors.size() || rays.empty()) {
    throw std::invalid_argument("field_photometric_gradients: rays and colors must align");
  }
  FieldGradients out;
  out.d_density.assign(field.node_count(), 0.0);
  out.d_color.assign(field.node_count() * 3, 0.0);
  const double scale = 1.0 / static_cast<double>(rays.size());
  for (std::size_t r = 0; r < rays.size(); ++r) {
    out.loss += ray_loss_and_grad(field, rays[r], gt_colors[r], n_samples, background, scale,
                                  out.d_density.data(), out.d_color.data());
  }
  return out;
}

VoxelField train_field(const VoxelField& field, const Dataset& dataset,
                       const FieldTrainConfig& config) {
  if (config.iters == 0) return field;
  if (dataset.cameras.empty() || dataset.train_indices.empty()) {
    throw std::invalid_argument("train_field: dataset has no training views");
  }
  dataset.validate();

  const std::size_t n_nodes = field.node_count();
  const std::size_t n_params = n_nodes * 4;  // density + rgb per node

  // Reparameterized copy: sigma = softplus(s), color = sigmoid(y). The
  // floors keep every raw parameter out of the saturated tails so training
  // can move a blank field.
  VoxelField trained = field;
  std::vector<double> raw(n_params);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    raw[i] = softplus_inv(std::max(field.density[i], config.init_density_floor));
  }
  for (std::size_t i = 0; i < n_nodes * 3; ++i) {
    raw[n_nodes + i] = logit(std::clamp(field.color[i], config.init_color_margin,
                                        1.0 - config.init_color_margin));
  }
  for (std::size_t i = 0; i < n_nodes; ++i) trained.density[i] = softplus(raw[i]);
  for (std::size_t i = 0; i < n_nodes * 3; ++i) trained.color[i] = sigmoid(raw[n_nodes + i]);

  std::vector<double> m(n_params, 0.0), v(n_params, 0.0);
  std::vector<double> grad(n_params, 0.0);

  // Flat index space over all training pixels for uniform ray draws.
  std::vector<std::uint64_t> pixel_offsets(dataset.train_indices.size() + 1, 0);
  for (std::size_t k = 0; k < dataset.train_indices.size(); ++k) {
    const Camera& camera = dataset.cameras[dataset.train_indices[k]];
    pixel_offsets[k + 1] =
        pixel_offsets[k] + static_cast<std::uint64_t>(camera.width) * camera.height;
  }
  const std::uint64_t total_pixels = pixel_offsets.back();

  Rng rng(config.seed);
  const int slices = thread_count();
  std::vector<std::vector<double>> slice_grads;
  std::vector<double> slice_loss(slices, 0.0);
  if (slices > 1) slice_grads.assign(slices, std::vector<double>(n_params, 0.0));

  struct RayBatch {
    Ray ray;
    Vec3 gt;
  };
  std::vector<RayBatch> batch(config.rays_per_iter);

  for (int iter = 1; iter <= config.iters; ++iter) {
    for (int r = 0; r < config.rays_per_iter; ++r) {
      const std::uint64_t flat = rng.uniform_index(total_pixels);
      const std::size_t k =
          static_cast<std::size_t>(std::upper_bound(pixel_offsets.begin(), pixel_offsets.end(),
                                                    flat) -
                                   pixel_offsets.begin()) -
          1;
      const int view = dataset.train_indices[k];
      const Camera& camera = dataset.cameras[view];
      const std::uint64_t local = flat - pixel_offsets[k];
      const int px = static_cast<int>(local % camera.width);
      const int py = static_cast<int>(local / camera.width);
      batch[r].ray = pixel_center_ray(camera, px, py);
      const Image& img = dataset.images[view];
      batch[r].gt = Vec3(img.at(px, py, 0), img.at(px, py, 1), img.at(px, py, 2));
    }

    const double scale = 1.0 / config.rays_per_iter;
    double loss = 0.0;
    if (slices == 1) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (const RayBatch& rb : batch) {
        loss += ray_loss_and_grad(trained, rb.ray, rb.gt, config.n_samples, config.background,
                                  scale, grad.data(), grad.data() + n_nodes);
      }
    } else {
      // Per-slice buffers merged in slice order keep the reduction
      // deterministic for a fixed thread count.
      parallel_for_slices(config.rays_per_iter, [&](int s, std::int64_t begin, std::int64_t end) {
        std::fill(slice_grads[s].begin(), slice_grads[s].end(), 0.0);
        slice_loss[s] = 0.0;
        for (std::int64_t r = begin; r < end; ++r) {
          slice_loss[s] += ray_loss_and_grad(trained, batch[r].ray, batch[r].gt, config.n_samples,
                                             config.background, scale, slice_grads[s].data(),
                                             slice_grads[s].data() + n_nodes);
        }
      });
      std::fill(grad.begin(), grad.end(), 0.0);
      for (int s = 0; s < slices; ++s) {
        loss += slice_loss[s];
        const std::vector<double>& g = slice_grads[s];
        for (std::size_t i = 0; i < n_params; ++i) grad[i] += g[i];
      }
    }

    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_field: non-finite loss at iteration " +
                               std::to_string(iter));
    }

    // Adam on the raw parameters, then refresh the constrained arrays.
    const double bc1 = 1.0 - std::pow(config.beta1, iter);
    const double bc2 = 1.0 - std::pow(config.beta2, iter);
    parallel_for_slices(static_cast<std::int64_t>(n_params),
                        [&](int, std::int64_t begin, std::int64_t end) {
      for (std::int64_t i = begin; i < end; ++i) {
        // Chain through the reparameterization.
        double g = grad[i];
        if (static_cast<std::size_t>(i) < n_nodes) {
          g *= sigmoid(raw[i]);  // d softplus(s) / d s
        } else {
          const double c = trained.color[i - n_nodes];
          g *= c * (1.0 - c);  // d sigmoid(y) / d y
        }
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        raw[i] -= config.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.eps);
      }
    });
    parallel_for_slices(static_cast<std::int64_t>(n_nodes),
                        [&](int, std::int64_t begin, std::int64_t end) {
      for (std::int64_t i = begin; i < end; ++i) {
        trained.density[i] = softplus(raw[i]);
        trained.color[i * 3 + 0] = sigmoid(raw[n_nodes + i * 3 + 0]);
        trained.color[i * 3 + 1] = sigmoid(raw[n_nodes + i * 3 + 1]);
        trained.color[i * 3 + 2] = sigmoid(raw[n_nodes + i * 3 + 2]);
      }
    });

    if (config.log_every > 0 && (iter % config.log_every == 0 || iter == config.iters)) {
      std::fprintf(stderr, "[field] iter %d/%d loss %.6f\n", iter, config.iters, loss);
    }
  }
  return trained;
}

}  // namespace splatinit
