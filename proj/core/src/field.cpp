// SPDX-License-Identifier: Apache-2.0
#include "splatinit/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "splatinit/parallel.hpp"
#include "splatinit/rng.hpp"

namespace splatinit {

VoxelField::VoxelField(const Eigen::Vector3i& res, const Aabb& box) {
  if ((res.array() < 2).any()) {
    throw std::invalid_argument("VoxelField: resolution must be at least 2 per axis");
  }
  if (!box.valid() || (box.extent().array() <= 0.0).any()) {
    throw std::invalid_argument("VoxelField: bounds must have positive extent");
  }
  resolution = res;
  bounds = box;
  density.assign(node_count(), 0.0);
  color.assign(node_count() * 3, 0.0);
}

Vec3 VoxelField::node_position(int ix, int iy, int iz) const {
  const Vec3 ext = bounds.extent();
  return bounds.min + Vec3(ext.x() * ix / (resolution.x() - 1),
                           ext.y() * iy / (resolution.y() - 1),
                           ext.z() * iz / (resolution.z() - 1));
}

Vec3 VoxelField::cell_size() const {
  return bounds.extent().cwiseQuotient((resolution - Eigen::Vector3i::Ones()).cast<double>());
}

namespace {

// The eight grid nodes around x and their trilinear weights. `inside` is
// false (all weights zero) when x falls outside the bounds.
struct TriStencil {
  std::size_t idx[8];
  double w[8];
  bool inside = false;
};

TriStencil tri_stencil(const VoxelField& field, const Vec3& x) {
  TriStencil st;
  if (!field.bounds.contains(x)) return st;
  const Vec3 ext = field.bounds.extent();
  double fx[3];
  int ix[3];
  for (int a = 0; a < 3; ++a) {
    const int n = field.resolution[a];
    double u = (x[a] - field.bounds.min[a]) / ext[a] * (n - 1);
    int i = static_cast<int>(std::floor(u));
    // Clamp so x == bounds.max interpolates inside the last cell.
    i = std::clamp(i, 0, n - 2);
    ix[a] = i;
    fx[a] = u - i;
  }
  st.inside = true;
  int k = 0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx, ++k) {
        st.idx[k] = field.node_index(ix[0] + dx, ix[1] + dy, ix[2] + dz);
        st.w[k] = (dx ? fx[0] : 1.0 - fx[0]) * (dy ? fx[1] : 1.0 - fx[1]) *
                  (dz ? fx[2] : 1.0 - fx[2]);
      }
    }
  }
  return st;
}

}  // namespace

FieldSample sample_field(const VoxelField& field, const Vec3& x) {
  FieldSample out;
  const TriStencil st = tri_stencil(field, x);
  if (!st.inside) return out;
  for (int k = 0; k < 8; ++k) {
    out.density += st.w[k] * field.density[st.idx[k]];
    const double* c = &field.color[st.idx[k] * 3];
    out.color.x() += st.w[k] * c[0];
    out.color.y() += st.w[k] * c[1];
    out.color.z() += st.w[k] * c[2];
  }
  return out;
}

bool clip_ray_to_bounds(const Aabb& bounds, const Ray& ray, double& lo, double& hi) {
  lo = ray.t_min;
  hi = ray.t_max;
  for (int k = 0; k < 3; ++k) {
    const double o = ray.origin[k], d = ray.dir[k];
    if (std::abs(d) < 1e-300) {
      if (o < bounds.min[k] || o > bounds.max[k]) return false;
      continue;
    }
    double t0 = (bounds.min[k] - o) / d;
    double t1 = (bounds.max[k] - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    if (!(lo < hi)) return false;
  }
  return true;
}

TerminationProfile march_ray(const VoxelField& field, const Ray& ray, int n_samples) {
  if (n_samples < 2) {
    throw std::invalid_argument("march_ray: n_samples must be at least 2");
  }
  if (!std::isfinite(ray.t_min) || !std::isfinite(ray.t_max) || !(ray.t_max > ray.t_min)) {
    throw std::invalid_argument("march_ray: ray needs a finite, non-empty [t_min, t_max]");
  }
  TerminationProfile profile;
  profile.ray = ray;
  profile.ts.resize(n_samples + 1);
  profile.weights.resize(n_samples);
  profile.cdf.resize(n_samples);

  // The field is identically empty outside its bounds, so restricting the
  // samples to the inside span refines the quadrature without changing what
  // it integrates. A ray that misses the bounds keeps its own range and
  // gets an all-zero profile.
  double lo = ray.t_min, hi = ray.t_max;
  if (!clip_ray_to_bounds(field.bounds, ray, lo, hi)) {
    lo = ray.t_min;
    hi = ray.t_max;
  }
  const double dt = (hi - lo) / n_samples;
  for (int i = 0; i <= n_samples; ++i) profile.ts[i] = lo + dt * i;

  double transmittance = 1.0;
  double running = 0.0;
  double depth = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double t_mid = profile.ts[i] + 0.5 * dt;
    const double sigma = sample_field(field, ray.at(t_mid)).density;
    const double alpha = 1.0 - std::exp(-sigma * dt);
    const double w = transmittance * alpha;
    profile.weights[i] = w;
    running += w;
    profile.cdf[i] = running;
    depth += t_mid * w;
    transmittance *= 1.0 - alpha;
  }
  profile.total_alpha = running;
  profile.accumulated_depth = depth;
  return profile;
}

double cdf_at(const TerminationProfile& profile, double t) {
  const int n = profile.interval_count();
  if (n == 0 || t <= profile.ts.front()) return 0.0;
  if (t >= profile.ts.back()) return profile.total_alpha;
  const auto it = std::upper_bound(profile.ts.begin(), profile.ts.end(), t);
  const int i = static_cast<int>(it - profile.ts.begin()) - 1;
  const double lo = profile.ts[i];
  const double hi = profile.ts[i + 1];
  const double prev = i > 0 ? profile.cdf[i - 1] : 0.0;
  return prev + profile.weights[i] * (t - lo) / (hi - lo);
}

std::optional<double> inverse_cdf_sample(const TerminationProfile& profile, double u,
                                         double alpha_floor) {
  if (!(profile.total_alpha > alpha_floor)) return std::nullopt;
  const int n = profile.interval_count();
  const double target = u * profile.total_alpha;
  // First interval whose cumulative mass reaches the target; skip zero-weight
  // intervals so u = 0 lands on the left edge of the support.
  int i = static_cast<int>(std::lower_bound(profile.cdf.begin(), profile.cdf.end(), target) -
                           profile.cdf.begin());
  i = std::min(i, n - 1);
  while (i < n - 1 && profile.weights[i] <= 0.0) ++i;
  const double prev = i > 0 ? profile.cdf[i - 1] : 0.0;
  double frac = 0.0;
  if (profile.weights[i] > 0.0) {
    frac = std::clamp((target - prev) / profile.weights[i], 0.0, 1.0);
  }
  return profile.ts[i] + frac * (profile.ts[i + 1] - profile.ts[i]);
}

double field_depth(const VoxelField& field, const Ray& ray, int n_samples) {
  return march_ray(field, ray, n_samples).accumulated_depth;
}

PointCloud sample_point_cloud(const VoxelField& field, const std::vector<Camera>& cameras,
                              int n_points, std::uint64_t seed,
                              const PointSamplingConfig& config) {
  if (n_points < 1) {
    throw std::invalid_argument("sample_point_cloud: n_points must be at least 1");
  }
  if (cameras.empty()) {
    throw std::invalid_argument("sample_point_cloud: camera list is empty");
  }
  std::uint64_t total_pixels = 0;
  for (const Camera& camera : cameras) {
    total_pixels += static_cast<std::uint64_t>(camera.width) * camera.height;
  }

  PointCloud cloud;
  cloud.positions.reserve(n_points);
  cloud.colors.reserve(n_points);
  Rng rng(seed);
  std::uint64_t attempts = 0;
  while (cloud.positions.size() < static_cast<std::size_t>(n_points)) {
    ++attempts;
    // Probing a large multiple of the request with zero acceptances means the
    // field has no mass along any training ray.
    if (attempts % 16384 == 0 && cloud.positions.empty()) {
      throw std::runtime_error("degenerate field: all sampled rays rejected");
    }
    std::uint64_t flat = rng.uniform_index(total_pixels);
    std::size_t cam_idx = 0;
    while (flat >= static_cast<std::uint64_t>(cameras[cam_idx].width) * cameras[cam_idx].height) {
      flat -= static_cast<std::uint64_t>(cameras[cam_idx].width) * cameras[cam_idx].height;
      ++cam_idx;
    }
    const Camera& camera = cameras[cam_idx];
    const int px = static_cast<int>(flat % camera.width);
    const int py = static_cast<int>(flat / camera.width);

    const Ray ray = pixel_center_ray(camera, px, py);
    const TerminationProfile profile = march_ray(field, ray, config.n_samples);
    const double u = rng.uniform();
    const std::optional<double> t = inverse_cdf_sample(profile, u, config.alpha_floor);
    if (!t) continue;
    const Vec3 position = ray.at(*t);
    cloud.positions.push_back(position);
    cloud.colors.push_back(sample_field(field, position).color);
  }
  return cloud;
}

FieldRender render_field(const VoxelField& field, const Camera& camera, int n_samples,
                         const Vec3& background) {
  FieldRender out;
  out.color = Image(camera.width, camera.height, 3);
  out.depth = Image(camera.width, camera.height, 1);
  out.alpha = Image(camera.width, camera.height, 1);
  parallel_for(camera.height, [&](std::int64_t y) {
    for (int x = 0; x < camera.width; ++x) {
      const Ray ray = pixel_center_ray(camera, x, static_cast<int>(y));
      const TerminationProfile profile = march_ray(field, ray, n_samples);
      Vec3 c = (1.0 - profile.total_alpha) * background;
      const double dt = profile.ts[1] - profile.ts[0];
      for (int i = 0; i < profile.interval_count(); ++i) {
        const double w = profile.weights[i];
        if (w <= 0.0) continue;
        c += w * sample_field(field, ray.at(profile.ts[i] + 0.5 * dt)).color;
      }
      for (int ch = 0; ch < 3; ++ch) out.color.at(x, static_cast<int>(y), ch) = c[ch];
      out.depth.at(x, static_cast<int>(y), 0) = profile.accumulated_depth;
      out.alpha.at(x, static_cast<int>(y), 0) = profile.total_alpha;
    }
  });
  return out;
}

}  // namespace splatinit
