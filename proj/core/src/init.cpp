#include "splatinit/init.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "splatinit/parallel.hpp"
#include "splatinit/rng.hpp"

namespace splatinit {

namespace {

PointCloud uniform_cube_cloud(const Vec3& center, double side, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("point cloud init: n must be >= 1");
  Rng rng(seed);
  PointCloud cloud;
  cloud.positions.reserve(static_cast<size_t>(n));
  cloud.colors.reserve(static_cast<size_t>(n));
  const double half = 0.5 * side;
  for (int i = 0; i < n; ++i) {
    Vec3 p;
    for (int k = 0; k < 3; ++k) p[k] = rng.uniform(center[k] - half, center[k] + half);
    Vec3 c;
    for (int k = 0; k < 3; ++k) c[k] = rng.uniform();
    cloud.positions.push_back(p);
    cloud.colors.push_back(c);
  }
  return cloud;
}

}  // namespace

PointCloud bbox_random_init(const std::vector<Camera>& cameras, double multiplier, int n,
                            std::uint64_t seed) {
  if (!(multiplier > 0.0)) {
    throw std::invalid_argument("bbox_random_init: multiplier must be positive");
  }
  const Aabb bbox = camera_bbox(cameras);
  double side = multiplier * bbox.largest_extent();
  if (!(side > 0.0)) {
    std::cerr << "bbox_random_init: degenerate camera bounding box, using a unit cube\n";
    side = 1.0;
  }
  return uniform_cube_cloud(bbox.center(), side, n, seed);
}

PointCloud constant_box_init(double extent, int n, std::uint64_t seed) {
  if (!(extent > 0.0)) {
    throw std::invalid_argument("constant_box_init: extent must be positive");
  }
  return uniform_cube_cloud(Vec3::Zero(), extent, n, seed);
}

namespace {

// Mean distance to the 3 nearest neighbors of every point, brute force over
// a uniform grid so the common case stays near-linear.
std::vector<double> mean_3nn_distance(const std::vector<Vec3>& pts) {
  const size_t n = pts.size();
  Aabb box;
  for (const Vec3& p : pts) box.expand(p);
  const Vec3 extent = box.extent().cwiseMax(1e-12);
  const int res = std::clamp(static_cast<int>(std::cbrt(static_cast<double>(n) / 2.0)), 1, 64);
  const Eigen::Array3d inv_cell = static_cast<double>(res) / extent.array();

  auto cell_of = [&](const Vec3& p) {
    Eigen::Vector3i c;
    for (int k = 0; k < 3; ++k) {
      c[k] = std::clamp(static_cast<int>((p[k] - box.min[k]) * inv_cell[k]), 0, res - 1);
    }
    return c;
  };
  std::vector<std::vector<int>> cells(static_cast<size_t>(res) * res * res);
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3i c = cell_of(pts[i]);
    cells[static_cast<size_t>((c[2] * res + c[1]) * res + c[0])].push_back(static_cast<int>(i));
  }
  const double min_cell_side = (extent / static_cast<double>(res)).minCoeff();

  std::vector<double> result(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t ii) {
    const size_t i = static_cast<size_t>(ii);
    const Eigen::Vector3i home = cell_of(pts[i]);
    double best[3] = {kInf, kInf, kInf};
    auto offer = [&](double d) {
      if (d < best[2]) {
        best[2] = d;
        if (best[2] < best[1]) std::swap(best[1], best[2]);
        if (best[1] < best[0]) std::swap(best[0], best[1]);
      }
    };
    for (int ring = 0; ring < res; ++ring) {
      // Points in cells beyond this ring are at least (ring * cell) away,
      // so once the third-best distance is below that we can stop.
      if (ring > 0 && best[2] <= (ring - 1) * min_cell_side && std::isfinite(best[2])) break;
      for (int dz = -ring; dz <= ring; ++dz) {
        for (int dy = -ring; dy <= ring; ++dy) {
          for (int dx = -ring; dx <= ring; ++dx) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
            const int cx = home[0] + dx, cy = home[1] + dy, cz = home[2] + dz;
            if (cx < 0 || cy < 0 || cz < 0 || cx >= res || cy >= res || cz >= res) continue;
            for (int j : cells[static_cast<size_t>((cz * res + cy) * res + cx)]) {
              if (static_cast<size_t>(j) == i) continue;
              offer((pts[static_cast<size_t>(j)] - pts[i]).norm());
            }
          }
        }
      }
    }
    result[i] = (best[0] + best[1] + best[2]) / 3.0;
  });
  return result;
}

}  // namespace

GaussianScene scene_from_point_cloud(const PointCloud& cloud,
                                     const SceneFromPointsConfig& config) {
  const size_t n = cloud.positions.size();
  if (n < 4) {
    throw std::domain_error("scene_from_point_cloud: need at least 4 points, got " +
                            std::to_string(n));
  }
  if (cloud.colors.size() != n) {
    throw std::invalid_argument("scene_from_point_cloud: positions/colors size mismatch");
  }
  double upper = config.scene_extent;
  if (!(upper > 0.0)) {
    Aabb box;
    for (const Vec3& p : cloud.positions) box.expand(p);
    upper = box.largest_extent();
    if (!(upper > 0.0)) upper = 1.0;
  }

  const std::vector<double> nn = mean_3nn_distance(cloud.positions);
  const double opacity_logit =
      std::log(config.initial_opacity / (1.0 - config.initial_opacity));

  GaussianScene scene;
  scene.sh_degree = 0;
  scene.primitives.resize(n);
  for (size_t i = 0; i < n; ++i) {
    GaussianPrimitive& g = scene.primitives[i];
    g.mean = cloud.positions[i];
    const double dist = std::clamp(nn[i], config.scale_clamp_min, upper);
    g.log_scale = Vec3::Constant(std::log(dist));
    g.rotation = Vec4(1.0, 0.0, 0.0, 0.0);
    g.opacity_logit = opacity_logit;
    g.sh = {(cloud.colors[i][0] - 0.5) / kSh0, (cloud.colors[i][1] - 0.5) / kSh0,
            (cloud.colors[i][2] - 0.5) / kSh0};
  }
  return scene;
}

}  // namespace splatinit
