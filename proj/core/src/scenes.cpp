#include "splatinit/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "splatinit/parallel.hpp"
#include "splatinit/rng.hpp"

namespace splatinit {

namespace {

struct Solid {
  bool is_box = false;
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3::Zero();  // box half extents; spheres use half[0] as radius
  Vec3 color = Vec3::Ones();

  bool inside(const Vec3& p) const {
    const Vec3 d = p - center;
    if (is_box) {
      return std::abs(d[0]) <= half[0] && std::abs(d[1]) <= half[1] && std::abs(d[2]) <= half[2];
    }
    return d.squaredNorm() <= half[0] * half[0];
  }

  double distance(const Vec3& p) const {
    const Vec3 d = p - center;
    if (!is_box) return d.norm() - half[0];
    const Vec3 q = d.cwiseAbs() - half;
    const double outside = q.cwiseMax(0.0).norm();
    const double inside_d = std::min(q.maxCoeff(), 0.0);
    return outside + inside_d;
  }
};

struct SceneLayout {
  std::vector<Solid> solids;
  Aabb bounds;
  Vec3 look_at = Vec3::Zero();
  double ring_radius = 3.0;
  double height_low = 0.0;
  double height_high = 0.0;
};

Vec3 jitter_color(const Vec3& c, Rng& rng) {
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    out[k] = std::clamp(c[k] + rng.uniform(-0.05, 0.05), 0.05, 0.95);
  }
  return out;
}

Vec3 jitter_point(const Vec3& p, Rng& rng, double amount) {
  Vec3 out;
  for (int k = 0; k < 3; ++k) out[k] = p[k] + rng.uniform(-amount, amount);
  return out;
}

Solid sphere(const Vec3& c, double r, const Vec3& color) {
  Solid s;
  s.center = c;
  s.half = Vec3::Constant(r);
  s.color = color;
  return s;
}

Solid box(const Vec3& c, const Vec3& half, const Vec3& color) {
  Solid s;
  s.is_box = true;
  s.center = c;
  s.half = half;
  s.color = color;
  return s;
}

SceneLayout layout_for(const std::string& name, Rng& rng) {
  SceneLayout sc;
  sc.bounds.min = Vec3(-2.2, -2.2, -0.2);
  sc.bounds.max = Vec3(2.2, 2.2, 2.6);
  if (name == "spheres") {
    sc.look_at = Vec3(0.0, 0.0, 1.2);
    sc.height_low = 0.4;
    sc.height_high = 2.2;
    // One sphere sits at the look-at point so image centers are never
    // background; the rest spread through the volume at varied heights.
    sc.solids = {
        sphere(Vec3(0.0, 0.0, 1.2), 0.45, Vec3(0.85, 0.20, 0.15)),
        sphere(jitter_point(Vec3(0.9, 0.6, 0.9), rng, 0.05), 0.30, Vec3(0.20, 0.75, 0.25)),
        sphere(jitter_point(Vec3(-0.8, 0.7, 1.6), rng, 0.05), 0.35, Vec3(0.20, 0.35, 0.85)),
        sphere(jitter_point(Vec3(0.3, -0.9, 1.8), rng, 0.05), 0.25, Vec3(0.90, 0.80, 0.20)),
    };
    for (Solid& s : sc.solids) s.color = jitter_color(s.color, rng);
  } else if (name == "boxes") {
    sc.look_at = Vec3(0.0, 0.0, 1.1);
    sc.height_low = 0.4;
    sc.height_high = 2.2;
    sc.solids = {
        box(Vec3(0.0, 0.0, 0.9), Vec3(0.50, 0.35, 0.30), Vec3(0.85, 0.25, 0.20)),
        box(jitter_point(Vec3(0.8, -0.5, 1.4), rng, 0.05), Vec3(0.25, 0.25, 0.45),
            Vec3(0.20, 0.70, 0.30)),
        box(jitter_point(Vec3(-0.7, 0.6, 1.1), rng, 0.05), Vec3(0.30, 0.40, 0.25),
            Vec3(0.25, 0.35, 0.85)),
    };
    for (Solid& s : sc.solids) s.color = jitter_color(s.color, rng);
  } else if (name == "reflective_floor_analog") {
    sc.look_at = Vec3(0.0, 0.0, 0.8);
    sc.height_low = 0.8;
    sc.height_high = 2.0;
    // A large textureless light slab (the hard, low-texture region) plus a
    // few colored solids standing on it.
    sc.solids = {
        box(Vec3(0.0, 0.0, (sc.bounds.min[2] + 0.35) * 0.5),
            Vec3(2.2, 2.2, (0.35 - sc.bounds.min[2]) * 0.5), Vec3(0.78, 0.78, 0.80)),
        sphere(jitter_point(Vec3(0.5, 0.4, 0.95), rng, 0.05), 0.40, Vec3(0.85, 0.20, 0.15)),
        box(jitter_point(Vec3(-0.7, -0.5, 0.75), rng, 0.05), Vec3(0.30, 0.30, 0.35),
            Vec3(0.20, 0.35, 0.85)),
        sphere(jitter_point(Vec3(-0.2, 0.8, 1.5), rng, 0.05), 0.28, Vec3(0.20, 0.70, 0.30)),
    };
    // Keep the slab itself untouched by color jitter: its flat appearance
    // is the point of the scene. Jitter only the foreground solids.
    for (size_t i = 1; i < sc.solids.size(); ++i) {
      sc.solids[i].color = jitter_color(sc.solids[i].color, rng);
    }
  } else {
    throw std::domain_error("make_toy_scene: unknown scene '" + name + "'");
  }
  return sc;
}

VoxelField voxelize(const SceneLayout& sc, int grid_resolution, double solid_density) {
  VoxelField field(Eigen::Vector3i::Constant(grid_resolution), sc.bounds);
  const Vec3 cell = field.cell_size();
  const int nx = field.resolution[0], ny = field.resolution[1], nz = field.resolution[2];

  parallel_for_slices(nz, [&](int, std::int64_t z0, std::int64_t z1) {
    for (std::int64_t iz = z0; iz < z1; ++iz) {
      for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
          const size_t node = field.node_index(ix, iy, static_cast<int>(iz));
          const Vec3 p = field.node_position(ix, iy, static_cast<int>(iz));
          // Supersampled fractional occupancy: 8 fixed offsets at the
          // corners of the half-cell cube around the node.
          int hits = 0;
          Vec3 color_sum = Vec3::Zero();
          for (int s = 0; s < 8; ++s) {
            const Vec3 q = p + Vec3(cell[0] * ((s & 1) ? 0.25 : -0.25),
                                    cell[1] * ((s & 2) ? 0.25 : -0.25),
                                    cell[2] * ((s & 4) ? 0.25 : -0.25));
            for (const Solid& solid : sc.solids) {
              if (solid.inside(q)) {
                ++hits;
                color_sum += solid.color;
                break;
              }
            }
          }
          field.density[node] = solid_density * (hits / 8.0);
          Vec3 color;
          if (hits > 0) {
            color = color_sum / hits;
          } else {
            // Empty nodes take the color of the nearest solid so trilinear
            // interpolation does not smear black into surfaces.
            double best = kInf;
            color = Vec3::Zero();
            for (const Solid& solid : sc.solids) {
              const double d = solid.distance(p);
              if (d < best) {
                best = d;
                color = solid.color;
              }
            }
          }
          for (int c = 0; c < 3; ++c) field.color[3 * node + c] = color[c];
        }
      }
    }
  });
  return field;
}

Camera ring_camera(const SceneLayout& sc, int i, int n_views, int resolution) {
  const double angle = 2.0 * std::numbers::pi * i / n_views;
  const double height = (i % 2 == 0) ? sc.height_low : sc.height_high;
  const Vec3 pos(sc.ring_radius * std::cos(angle), sc.ring_radius * std::sin(angle), height);

  const Vec3 forward = (sc.look_at - pos).normalized();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = Vec3::UnitX();
  right.normalize();
  const Vec3 down = forward.cross(right);

  Camera cam;
  cam.width = resolution;
  cam.height = resolution;
  cam.fx = cam.fy = 0.75 * resolution;
  cam.cx = 0.5 * resolution;
  cam.cy = 0.5 * resolution;
  cam.R.row(0) = right;
  cam.R.row(1) = down;
  cam.R.row(2) = forward;
  cam.t = -cam.R * pos;
  cam.near = 0.1;
  cam.far = 12.0;
  return cam;
}

}  // namespace

ToyScene make_toy_scene(const std::string& name, int resolution, int n_views,
                        std::uint64_t seed, const ToySceneConfig& config) {
  if (resolution < 8) {
    throw std::invalid_argument("make_toy_scene: resolution must be at least 8");
  }
  if (n_views < 4) {
    throw std::invalid_argument("make_toy_scene: need at least 4 views");
  }
  Rng rng(seed);
  const SceneLayout sc = layout_for(name, rng);

  ToyScene scene{Dataset{}, voxelize(sc, config.grid_resolution, config.solid_density)};
  scene.dataset.name = name;
  scene.dataset.bounds = sc.bounds;
  for (int i = 0; i < n_views; ++i) {
    const Camera cam = ring_camera(sc, i, n_views, resolution);
    const FieldRender render = render_field(scene.field, cam, config.gt_samples,
                                            config.background);
    scene.dataset.cameras.push_back(cam);
    scene.dataset.images.push_back(render.color);
    if (i % 5 == 4) {
      scene.dataset.test_indices.push_back(i);
    } else {
      scene.dataset.train_indices.push_back(i);
    }
  }
  scene.dataset.validate();
  return scene;
}

}  // namespace splatinit
